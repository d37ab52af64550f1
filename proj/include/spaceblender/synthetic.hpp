#pragma once

// Deterministic stand-ins for the model backends plus a small analytic scene
// set that serves as ground truth.
//
// Synthetic images follow one convention: a pixel showing class `c` at z-depth
// `d` has color palette(c) * shade(d). Segmentation recovers `c` from the
// chromaticity and depth prediction recovers `d` from the brightness ratio.

#include "spaceblender/backends.hpp"
#include "spaceblender/core.hpp"

#include <functional>
#include <span>
#include <string_view>

namespace spaceblender::synthetic {

/// Brightness attenuation length of the shading convention, meters.
inline constexpr double kShadeLength = 8.0;
/// Metric depth that relative depth 1.0 maps to in painted content.
inline constexpr double kRelativeDepthScale = 4.0;

inline float shade(double depth) { return static_cast<float>(std::exp(-depth / kShadeLength)); }

/// Color of class `label` seen at `depth`.
Eigen::Vector3f shaded_color(std::int32_t label, double depth);

/// Classes the synthetic segmenter distinguishes.
std::span<const std::int32_t> vocabulary();

/// Nearest vocabulary class by chromaticity; kUnlabeled for near-black input.
std::int32_t classify(const Eigen::Vector3f& rgb);

/// Depth encoded by `rgb` for class `label` (inverse of shaded_color).
double decode_depth(const Eigen::Vector3f& rgb, std::int32_t label);

/// Oriented rectangle with a semantic label.
struct Quad {
  Vec3d center;
  Vec3d u_axis;  // unit
  Vec3d v_axis;  // unit, orthogonal to u_axis
  double half_u = 0.0;
  double half_v = 0.0;
  std::int32_t label = 0;
};

struct Scene {
  std::vector<Quad> quads;

  void add_quad(const Vec3d& center, const Vec3d& u, const Vec3d& v, double half_u, double half_v,
                std::int32_t label);
  /// Box given by min/max corners; all six faces.
  void add_box(const Vec3d& lo, const Vec3d& hi, std::int32_t label);
  Scene transformed(const RigidTransformd& t) const;
};

struct SceneRender {
  ColorImage color;
  DepthImage depth;
  LabelImage labels;
};

/// Ray-casts `scene`; pixels hitting nothing get kMissingDepth, black and
/// kUnlabeled.
SceneRender render_scene(const Scene& scene, const CameraView& cam);

/// Built-in scene ids: box_room, two_plane, tilted_floor, furnished_person,
/// corner_room, office, lounge, studio, bedroom.
std::span<const std::string_view> scene_ids();

/// Throws std::invalid_argument for an unknown id.
Scene make_scene(std::string_view scene_id);

/// Straight back wall `wall_distance` ahead of the default camera, floor at
/// y = 0 and ceiling at `height`, rotated by `tilt_deg` about the camera's
/// x axis and then lifted by `offset` along y.
Scene make_tilted_floor_scene(double tilt_deg, double offset, double wall_distance = 4.0,
                              double height = 2.6);

/// Capture camera used for every built-in scene: (0, 1.5, 0) looking down -Z.
CameraView default_capture_camera(int width = 512, int height = 512);

/// Analytic color/depth/labels of a built-in scene.
SceneRender synthetic_scene_oracle(std::string_view scene_id, const CameraView& cam);

/// Caption the synthetic caption backend produces for a built-in scene.
std::string canned_caption(std::string_view scene_id);

// ---------------------------------------------------------------------------
// Backends

/// Decodes depth from shading; with known depths, known pixels pass through.
class DepthFromShading : public DepthBackend {
 public:
  std::string identity() const override { return "synthetic-depth-shading/1"; }
  DepthImage predict(const ColorImage& color, const DepthImage* known_depth,
                     const MaskImage* known_mask) override;
};

/// Chromaticity classifier over vocabulary().
class ChromaSegmenter : public SegmentationBackend {
 public:
  std::string identity() const override { return "synthetic-seg-chroma/1"; }
  LabelImage segment(const ColorImage& color) override;
};

/// Paints masked pixels. With semantic and depth conditioning, each pixel gets
/// the palette color of its semantic class shaded by the conditioned depth;
/// otherwise the mean color of unmasked pixels bordering the mask.
class PriorPainter : public InpaintBackend {
 public:
  std::string identity() const override { return "synthetic-inpaint-prior-painter/1"; }
  ColorImage inpaint(const InpaintRequest& request) override;
};

/// Caption from the dominant non-structural classes of the image.
class HistogramCaptioner : public CaptionBackend {
 public:
  std::string identity() const override { return "synthetic-caption-histogram/1"; }
  std::string caption(const ColorImage& color) override;
};

/// Answers region-description requests through `set_description` and floor
/// requests with a plain single line, both derived from the request text.
class TemplateLlm : public LlmBackend {
 public:
  std::string identity() const override { return "synthetic-llm-template/1"; }
  LlmReply complete(const LlmRequest& request) override;
};

/// LLM whose replies come from a callback; used to script protocol tests.
class ScriptedLlm : public LlmBackend {
 public:
  using Script = std::function<LlmReply(const LlmRequest&, int call_index)>;
  explicit ScriptedLlm(Script script) : script_(std::move(script)) {}
  std::string identity() const override { return "scripted-llm"; }
  LlmReply complete(const LlmRequest& request) override {
    history_.push_back(request);
    return script_(request, calls_++);
  }
  int calls() const { return calls_; }
  const std::vector<LlmRequest>& history() const { return history_; }

 private:
  Script script_;
  int calls_ = 0;
  std::vector<LlmRequest> history_;
};

/// Full synthetic backend set.
BackendSet make_backends();

}  // namespace spaceblender::synthetic
