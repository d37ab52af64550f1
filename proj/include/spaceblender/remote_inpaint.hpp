#pragma once

// Inpainting through an A1111-style WebUI HTTP API (img2img with an inpaint
// mask and ControlNet units). Field names follow WebUI 1.x with the
// sd-webui-controlnet extension: `init_images`, `mask` and
// `alwayson_scripts.controlnet.args[]`, one unit per conditioning channel in
// request order with `image`, `model_name` (mirrored as `model`) and `weight`.

#include "spaceblender/backends.hpp"
#include "spaceblender/core.hpp"

#include <chrono>
#include <functional>
#include <string>

namespace spaceblender {

struct RemoteInpaintOptions {
  /// Base URL, e.g. http://127.0.0.1:7860 (plain HTTP).
  std::string endpoint;
  std::string route = "/sdapi/v1/img2img";
  std::string sampler = "Euler a";
  int steps = 30;
  double cfg_scale = 7.0;
  double denoising_strength = 1.0;
  int retries = 3;
  std::chrono::milliseconds initial_backoff{2000};
  std::chrono::seconds timeout{600};
  /// Replaceable for tests.
  std::function<void(std::chrono::milliseconds)> sleep;
};

/// Error after the last retry; `attempts` counts requests actually sent.
class RemoteInpaintError : public PipelineError {
 public:
  RemoteInpaintError(const std::string& what, int attempts)
      : PipelineError("backends", what + " (after " + std::to_string(attempts) + " attempts)"), attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

/// JSON request body for `request`.
nlohmann::json build_inpaint_payload(const InpaintRequest& request, const RemoteInpaintOptions& options);

/// First image of a WebUI response body. Throws std::runtime_error when absent or undecodable.
ColorImage parse_inpaint_response(const std::string& body);

/// Copies unmasked pixels of `input` over `output`.
void restore_unmasked(const ColorImage& input, const MaskImage& mask, ColorImage& output);

class RemoteInpaintBackend : public InpaintBackend {
 public:
  explicit RemoteInpaintBackend(RemoteInpaintOptions options);
  std::string identity() const override;
  ColorImage inpaint(const InpaintRequest& request) override;

 private:
  RemoteInpaintOptions options_;
};

}  // namespace spaceblender
