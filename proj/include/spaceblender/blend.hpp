#pragma once

#include "spaceblender/ade20k.hpp"
#include "spaceblender/backends.hpp"
#include "spaceblender/config.hpp"
#include "spaceblender/layout.hpp"
#include "spaceblender/lift3d.hpp"
#include "spaceblender/prior.hpp"
#include "spaceblender/prompts.hpp"
#include "spaceblender/trajectory.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace spaceblender {

/// Minimum distance between a step camera and the prior hull boundary, meters.
inline constexpr double kCameraHullMargin = 0.1;

struct BlendPlan {
  PlacedLayout layout;
  /// Input captions at placement yaws followed by the inferred region prompts.
  std::vector<RegionPrompt> region_prompts;
  std::vector<TrajectoryStep> steps;
};

struct BlendState {
  /// The growing unified mesh.
  TriangleMeshd mesh;
  PriorMesh prior;
  BlendPlan plan;
  int iteration = 0;
  ConditioningWeights weights;
};

struct BlendOptions {
  ConditioningModels models;
  std::string negative_prompt;
  /// Base seed; step `i` inpaints with seed + i.
  std::uint64_t seed = 0;
  /// Keep the intermediate images of each iteration in its report.
  bool keep_images = false;
};

struct IterationImages {
  RenderedView rendered;
  PriorImageSet prior;
  ColorImage inpainted;
  LabelImage labels;
  /// Missing pixels whose label is wall, floor or ceiling.
  MaskImage structural;
  /// Depth handed to fusion (rendered depth where the view was already covered).
  DepthImage fused_depth;
};

struct IterationReport {
  int step_index = -1;
  StepPurpose purpose = StepPurpose::kBlend;
  /// True when the view had no missing pixels.
  bool skipped = false;
  double missing_fraction = 0.0;
  int structural_pixels = 0;
  std::string prompt;
  DepthAlignment alignment;
  Eigen::Index vertices_before = 0;
  Eigen::Index vertices_after = 0;
  std::optional<IterationImages> images;
};

/// One Stage-2 step applied to `state` in place: render, prior render, prompt,
/// inpaint, segment, structural depth copy, depth completion, alignment,
/// fusion. On error `state` is left untouched and the PipelineError carries
/// `step_index`.
IterationReport blend_iteration(BlendState& state, const TrajectoryStep& step, const BackendSet& backends,
                                const BlendOptions& options, int step_index);

/// Value form: returns the successor state.
BlendState blend_iteration(const BlendState& state, const TrajectoryStep& step, const BackendSet& backends,
                           const BlendOptions& options = {}, int step_index = 0);

/// Conditioning channels of one request: layout, depth, semantic, in that order.
std::vector<ConditioningImage> conditioning_images(const PriorImageSet& prior, const ConditioningWeights& weights,
                                                   const ConditioningModels& models);

struct IntermediateSubmesh {
  Submesh submesh;
  /// Maps the submesh's frame into the unified space.
  RigidTransformd placement;
  std::string prompt;
};

/// Rectangular room around the default input camera used to condition
/// intermediate image generation.
PriorMesh intermediate_template_prior(double diameter_m, double height_m);

/// Generates an image for the slot from the nearest region prompt, lifts it,
/// floor-aligns it (placing it unaligned when that fails) and places it at the
/// slot.
IntermediateSubmesh generate_intermediate_submesh(const IntermediateSlot& slot, const std::vector<RegionPrompt>& prompts,
                                                  const BackendSet& backends, const PriorMesh& template_prior,
                                                  const ConditioningWeights& weights, const BlendOptions& options,
                                                  const std::vector<std::int32_t>& floor_labels =
                                                      ade20k::default_floor_labels());

struct InputImage {
  std::string source_id;
  ColorImage color;
};

/// Everything Stage 1 produces.
struct StageOneResult {
  std::vector<Submesh> submeshes;
  PlacedLayout layout;
  PriorMesh prior;
  std::vector<RegionPrompt> known_prompts;
  std::vector<RegionPrompt> inferred_prompts;
  std::vector<std::string> warnings;
};

/// Ingest, lift, floor alignment, layout, prior and region prompts.
StageOneResult run_stage_one(const std::vector<InputImage>& inputs, const PipelineConfig& config,
                             const BackendSet& backends);

struct PipelineResult {
  TriangleMeshd mesh;
  StageOneResult stage_one;
  std::vector<IntermediateSubmesh> intermediates;
  /// Prior used in Stage 2 (rebuilt when intermediates were added).
  PriorMesh prior;
  BlendPlan plan;
  std::vector<IterationReport> reports;
  std::vector<std::string> warnings;
};

using IterationObserver = std::function<void(const IterationReport&, const BlendState&)>;

/// Both stages on in-memory images. Debug artifacts go to config.debug_dir
/// when set; `observer` sees every iteration.
PipelineResult run_pipeline(const std::vector<InputImage>& inputs, const PipelineConfig& config,
                            const BackendSet& backends, const IterationObserver& observer = {},
                            bool keep_images = false);

/// Reads config.input_paths, then runs both stages.
PipelineResult run_pipeline(const PipelineConfig& config, const BackendSet& backends,
                            const IterationObserver& observer = {});

/// Run manifest: config, config hash, seed, backend identities, input and
/// output digests and plan statistics.
nlohmann::json run_manifest(const PipelineConfig& config, const BackendSet& backends, const PipelineResult& result,
                            const std::string& output_sha256);

}  // namespace spaceblender
