#pragma once

#include "spaceblender/image.hpp"

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace spaceblender {

/// Monocular depth prediction with optional completion from known depths.
/// Implementations return positive finite depth everywhere and must return
/// pixels under `known_mask` unchanged.
class DepthBackend {
 public:
  virtual ~DepthBackend() = default;
  virtual std::string identity() const = 0;
  virtual DepthImage predict(const ColorImage& color, const DepthImage* known_depth = nullptr,
                             const MaskImage* known_mask = nullptr) = 0;
};

enum class ConditioningKind { kLayout, kDepth, kSemantic };

const char* to_string(ConditioningKind kind);

/// One conditioning channel of an inpainting request.
struct ConditioningImage {
  ConditioningKind kind = ConditioningKind::kLayout;
  ColorImage image;
  std::string model_name;
  double weight = 0.0;
};

struct InpaintRequest {
  ColorImage color;
  /// True where content must be generated.
  MaskImage mask;
  std::string prompt;
  std::string negative_prompt;
  std::vector<ConditioningImage> conditioning;
  std::uint64_t seed = 0;

  const ConditioningImage* find(ConditioningKind kind) const {
    for (const auto& c : conditioning)
      if (c.kind == kind) return &c;
    return nullptr;
  }
};

/// Text-conditioned inpainting. Pixels outside the mask are returned unchanged
/// and output is deterministic for a fixed seed.
class InpaintBackend {
 public:
  virtual ~InpaintBackend() = default;
  virtual std::string identity() const = 0;
  virtual ColorImage inpaint(const InpaintRequest& request) = 0;
};

class SegmentationBackend {
 public:
  virtual ~SegmentationBackend() = default;
  virtual std::string identity() const = 0;
  virtual LabelImage segment(const ColorImage& color) = 0;
};

class CaptionBackend {
 public:
  virtual ~CaptionBackend() = default;
  virtual std::string identity() const = 0;
  virtual std::string caption(const ColorImage& color) = 0;
};

struct LlmMessage {
  std::string role;
  std::string content;
};

struct LlmRequest {
  std::vector<LlmMessage> messages;
  /// Function definitions offered to the model (OpenAI-style schema).
  nlohmann::json functions = nlohmann::json::array();
};

struct LlmFunctionCall {
  std::string name;
  /// JSON-encoded argument object, as emitted by the model.
  std::string arguments;
};

struct LlmReply {
  std::string content;
  std::optional<LlmFunctionCall> function_call;
};

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual std::string identity() const = 0;
  virtual LlmReply complete(const LlmRequest& request) = 0;
};

/// The five model handles the pipeline needs.
struct BackendSet {
  std::shared_ptr<DepthBackend> depth;
  std::shared_ptr<InpaintBackend> inpaint;
  std::shared_ptr<SegmentationBackend> seg;
  std::shared_ptr<CaptionBackend> vlm;
  std::shared_ptr<LlmBackend> llm;

  bool complete() const { return depth && inpaint && seg && vlm && llm; }

  /// Identity strings keyed by role, for run manifests.
  nlohmann::json identities() const;
};

}  // namespace spaceblender
