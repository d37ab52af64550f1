#include "spaceblender/blend.hpp"

#include "spaceblender/ade20k.hpp"
#include "spaceblender/encoding.hpp"
#include "spaceblender/floor_align.hpp"
#include "spaceblender/image_io.hpp"
#include "spaceblender/ingest.hpp"
#include "spaceblender/mesh_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace spaceblender {
namespace {

// Message of a PipelineError without its "[stage] " prefix.
std::string bare_message(const PipelineError& e) {
  const std::string what = e.what();
  const std::string prefix = "[" + e.stage() + "] ";
  return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
}

[[noreturn]] void rethrow_with_step(int step_index, const TrajectoryStep& step) {
  try {
    throw;
  } catch (const PipelineError& e) {
    if (e.step_index() >= 0) throw;
    throw PipelineError(e.stage(), bare_message(e), step_index);
  } catch (const std::exception& e) {
    throw PipelineError("blend", std::string(to_string(step.purpose)) + " step failed: " + e.what(), step_index);
  }
}

std::string numbered(const char* prefix, int index, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%03d%s", prefix, index, suffix);
  return buf;
}

void dump_iteration(const std::filesystem::path& dir, const IterationReport& report) {
  if (!report.images) return;
  const auto& im = *report.images;
  const auto base = numbered("iter_", report.step_index, "_");
  write_png(dir / (base + "rendered.png"), im.rendered.color);
  write_mask_png(dir / (base + "mask.png"), im.rendered.missing);
  write_png(dir / (base + "layout.png"), edge_conditioning_image(im.prior.layout_edges));
  write_png(dir / (base + "depth_prior.png"), depth_conditioning_image(im.prior.depth));
  write_png(dir / (base + "semantic_prior.png"), im.prior.semantic);
  write_png(dir / (base + "inpainted.png"), im.inpainted);
  write_mask_png(dir / (base + "structural.png"), im.structural);
  write_depth_file(dir / (base + "fused_depth.bin"), im.fused_depth);
}

RoomSize room_size_of(const PriorMesh& prior) {
  Eigen::Vector2d lo = Eigen::Vector2d::Constant(std::numeric_limits<double>::max());
  Eigen::Vector2d hi = -lo;
  for (const auto& p : prior.hull) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return {hi.x() - lo.x(), prior.height_m, hi.y() - lo.y()};
}

// Seed offsets keeping the per-purpose random streams apart.
constexpr std::uint64_t kIngestSeedOffset = 0;
constexpr std::uint64_t kIntermediateSeedOffset = 1'000'000;
constexpr std::uint64_t kStepSeedOffset = 2'000'000;

}  // namespace

std::vector<ConditioningImage> conditioning_images(const PriorImageSet& prior, const ConditioningWeights& weights,
                                                   const ConditioningModels& models) {
  return {
      {ConditioningKind::kLayout, edge_conditioning_image(prior.layout_edges), models.layout, weights.layout},
      {ConditioningKind::kDepth, depth_conditioning_image(prior.depth), models.depth, weights.depth},
      {ConditioningKind::kSemantic, prior.semantic, models.semantic, weights.semantic},
  };
}

IterationReport blend_iteration(BlendState& state, const TrajectoryStep& step, const BackendSet& backends,
                                const BlendOptions& options, int step_index) {
  IterationReport report;
  report.step_index = step_index;
  report.purpose = step.purpose;
  report.vertices_before = state.mesh.vertex_count();
  report.vertices_after = report.vertices_before;
  const CameraView& cam = step.cam;
  try {
    if (!backends.complete()) throw PipelineError("blend", "backend set is incomplete");
    RenderedView rendered = render_view(state.mesh, cam);
    report.missing_fraction = rendered.missing_fraction();
    if (!rendered.missing.any()) {
      report.skipped = true;
      return report;
    }
    const int w = cam.width_px, h = cam.height_px;
    PriorImageSet prior = render_prior_images(state.prior, cam);

    if (state.plan.region_prompts.empty()) throw PipelineError("prompts", "plan has no region prompts");
    report.prompt = step.prompt_hint ? nearest_prompt(*step.prompt_hint, state.plan.region_prompts).description
                                     : select_prompt_for_view(cam, state.plan.region_prompts);

    InpaintRequest request;
    request.color = rendered.color;
    request.mask = rendered.missing;
    request.prompt = report.prompt;
    request.negative_prompt = options.negative_prompt;
    request.conditioning = conditioning_images(prior, state.weights, options.models);
    request.seed = options.seed + kStepSeedOffset + std::uint64_t(step_index);
    ColorImage painted = backends.inpaint->inpaint(request);
    if (!painted.same_size(w, h)) throw PipelineError("backends", "inpaint output size differs from request");
    for (Eigen::Index i = 0; i < rendered.missing.size(); ++i)
      if (!rendered.missing(i)) painted.pixels.row(i) = rendered.color.pixels.row(i);

    LabelImage labels = backends.seg->segment(painted);
    if (!same_size(labels, w, h)) throw PipelineError("backends", "segmentation output size differs from image");

    // Structural pixels take the prior depth verbatim; rendered pixels keep theirs.
    MaskImage structural = MaskImage::Constant(h, w, false);
    DepthImage known = rendered.depth;
    for (Eigen::Index i = 0; i < known.size(); ++i) {
      if (rendered.missing(i) && ade20k::is_structural(labels(i)) && !is_missing(prior.metric_depth(i))) {
        structural(i) = true;
        known(i) = prior.metric_depth(i);
      }
    }
    report.structural_pixels = static_cast<int>(structural.count());
    const MaskImage rendered_mask = !rendered.missing;
    const MaskImage known_mask = rendered_mask || structural;

    DepthImage predicted = backends.depth->predict(painted, &known, &known_mask);
    if (!same_size(predicted, w, h)) throw PipelineError("backends", "depth output size differs from image");
    report.alignment = align_depth(predicted, rendered.depth, rendered_mask);

    DepthImage fused = rendered.depth;
    for (Eigen::Index i = 0; i < fused.size(); ++i) {
      if (!rendered.missing(i)) continue;
      fused(i) = structural(i) ? prior.metric_depth(i) : report.alignment.depth(i);
      if (!(std::isfinite(fused(i)) && fused(i) > 0.f)) {
        throw PipelineError("backends", "depth completion produced a non-positive or non-finite value");
      }
    }

    TriangleMeshd grown = fuse_view(state.mesh, cam, painted, fused, rendered.missing, &labels, &rendered);
    report.vertices_after = grown.vertex_count();
    if (options.keep_images) {
      report.images = IterationImages{std::move(rendered), std::move(prior), std::move(painted),
                                      std::move(labels), std::move(structural), std::move(fused)};
    }
    state.mesh = std::move(grown);
    ++state.iteration;
  } catch (...) {
    rethrow_with_step(step_index, step);
  }
  return report;
}

BlendState blend_iteration(const BlendState& state, const TrajectoryStep& step, const BackendSet& backends,
                           const BlendOptions& options, int step_index) {
  BlendState next = state;
  blend_iteration(next, step, backends, options, step_index);
  return next;
}

PriorMesh intermediate_template_prior(double diameter_m, double height_m) {
  const double half = 0.5 * diameter_m;
  // Counter-clockwise in (x, z): the camera sits 1 m inside the rear wall.
  const std::vector<Vec2d> hull{{-half, 1.0}, {half, 1.0}, {half, -half}, {-half, -half}};
  return build_prior_from_hull(convex_hull_xz(hull), height_m);
}

IntermediateSubmesh generate_intermediate_submesh(const IntermediateSlot& slot, const std::vector<RegionPrompt>& prompts,
                                                  const BackendSet& backends, const PriorMesh& template_prior,
                                                  const ConditioningWeights& weights, const BlendOptions& options,
                                                  const std::vector<std::int32_t>& floor_labels) {
  if (prompts.empty()) throw PipelineError("blend", "no region prompts for intermediate generation");
  if (!backends.complete()) throw PipelineError("blend", "backend set is incomplete");
  const RegionPrompt& prompt = nearest_prompt(slot.yaw_deg, prompts);
  const CameraView cam = default_input_camera();
  const std::uint64_t seed =
      options.seed + kIntermediateSeedOffset + static_cast<std::uint64_t>(std::llround(slot.yaw_deg * 10.0));

  PreparedImage image;
  image.source_id = "intermediate@" + std::to_string(static_cast<int>(std::lround(slot.yaw_deg)));
  image.caption = prompt.description;
  try {
    const PriorImageSet prior = render_prior_images(template_prior, cam);
    InpaintRequest request;
    request.color = ColorImage(cam.width_px, cam.height_px);
    request.mask = MaskImage::Constant(cam.height_px, cam.width_px, true);
    request.prompt = prompt.description;
    request.negative_prompt = options.negative_prompt;
    request.conditioning = conditioning_images(prior, weights, options.models);
    request.seed = seed;
    image.color = backends.inpaint->inpaint(request);
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError("blend", std::string("intermediate image generation failed: ") + e.what());
  }
  if (!image.color.same_size(cam.width_px, cam.height_px)) {
    throw PipelineError("backends", "inpaint output size differs from request");
  }

  Submesh lifted = estimate_and_backproject(image, cam, *backends.depth, *backends.seg);
  IntermediateSubmesh out;
  out.submesh = align_or_generate_floor(lifted, backends, seed, floor_labels);
  out.placement = slot.transform * canonical_frame(out.submesh);
  out.prompt = prompt.description;
  return out;
}

StageOneResult run_stage_one(const std::vector<InputImage>& inputs, const PipelineConfig& config,
                             const BackendSet& backends) {
  if (inputs.empty()) throw PipelineError("ingest", "no input images");
  if (!backends.complete()) throw PipelineError("backends", "backend set is incomplete");
  StageOneResult out;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::uint64_t seed = config.seed + kIngestSeedOffset + i;
    PreparedImage prepared;
    try {
      prepared = preprocess_input(inputs[i].color, inputs[i].source_id);
    } catch (const std::invalid_argument& e) {
      throw PipelineError("ingest", inputs[i].source_id + ": " + e.what());
    }
    prepared = remove_people(prepared, *backends.seg, *backends.inpaint, *backends.vlm, seed);
    if (!prepared.caption) prepared.caption = caption_image(prepared.color, *backends.vlm);
    Submesh sub = estimate_and_backproject(prepared, default_input_camera(), *backends.depth, *backends.seg);
    sub = align_or_generate_floor(sub, backends, seed, config.floor_labels);
    if (!sub.aligned) out.warnings.push_back("floor of '" + sub.source_id + "' not found; placed unaligned");
    out.submeshes.push_back(std::move(sub));
  }

  try {
    out.layout = layout_submeshes(out.submeshes, config.diameter_m);
  } catch (const std::invalid_argument& e) {
    throw PipelineError("layout", e.what());
  }
  out.prior = build_geometric_prior(out.layout, out.submeshes);

  std::vector<std::pair<double, std::string>> known;
  for (const auto& p : out.layout.placements) {
    const auto& caption = out.submeshes[std::size_t(p.submesh_id)].caption;
    known.emplace_back(p.yaw_deg, caption);
    out.known_prompts.push_back({p.yaw_deg, caption});
  }
  const auto occupied = out.layout.occupied_yaws();
  std::vector<double> unknown;
  for (const auto& s : out.layout.intermediate_slots) unknown.push_back(s.yaw_deg);
  if (occupied.size() >= 2) {
    const auto mids = blend_yaws(occupied);
    unknown.insert(unknown.end(), mids.begin(), mids.end());
  }
  std::sort(unknown.begin(), unknown.end());
  if (!unknown.empty()) {
    out.inferred_prompts =
        infer_region_prompts(known, unknown, room_size_of(out.prior), *backends.llm, config.theme);
  }
  return out;
}

PipelineResult run_pipeline(const std::vector<InputImage>& inputs, const PipelineConfig& config,
                            const BackendSet& backends, const IterationObserver& observer, bool keep_images) {
  PipelineConfig checked = config;
  if (checked.input_paths.empty()) checked.input_paths.resize(std::max<std::size_t>(inputs.size(), 1));
  if (const auto problem = config_problem(checked); !problem.empty()) throw PipelineError("config", problem);
  PipelineResult result;
  result.stage_one = run_stage_one(inputs, config, backends);
  const StageOneResult& s1 = result.stage_one;
  result.warnings = s1.warnings;

  BlendOptions options;
  options.models = config.models;
  options.seed = config.seed;
  options.keep_images = keep_images || config.debug_dump();

  std::vector<RegionPrompt> prompts = s1.known_prompts;
  prompts.insert(prompts.end(), s1.inferred_prompts.begin(), s1.inferred_prompts.end());

  // Intermediate submeshes for wide gaps, then a prior around everything placed.
  if (!s1.layout.intermediate_slots.empty()) {
    const PriorMesh template_prior = intermediate_template_prior(config.diameter_m, s1.prior.height_m);
    for (const auto& slot : s1.layout.intermediate_slots) {
      auto inter = generate_intermediate_submesh(slot, s1.inferred_prompts, backends, template_prior, config.weights,
                                                 options,
                                                 config.floor_labels);
      if (!inter.submesh.aligned) {
        result.warnings.push_back("intermediate submesh at yaw " + std::to_string(slot.yaw_deg) +
                                  " has no floor; placed unaligned");
      }
      result.intermediates.push_back(std::move(inter));
    }
  }

  TriangleMeshd unified;
  std::vector<TriangleMeshd> placed;
  for (const auto& p : s1.layout.placements)
    placed.push_back(apply_rigid_transform(s1.submeshes[std::size_t(p.submesh_id)].mesh, p.transform));
  for (const auto& inter : result.intermediates) placed.push_back(apply_rigid_transform(inter.submesh.mesh, inter.placement));
  for (const auto& m : placed) append_mesh_inplace(unified, m);
  if (result.intermediates.empty()) {
    result.prior = s1.prior;
  } else {
    std::vector<const TriangleMeshd*> ptrs;
    for (const auto& m : placed) ptrs.push_back(&m);
    result.prior = build_prior_from_meshes(ptrs);
  }
  placed.clear();

  result.plan.layout = s1.layout;
  result.plan.region_prompts = prompts;
  const auto occupied = s1.layout.occupied_yaws();
  if (occupied.size() >= 2) result.plan.steps = blending_viewpoints(s1.layout);
  const auto completion = completion_trajectories(s1.layout, config.seed);
  result.plan.steps.insert(result.plan.steps.end(), completion.begin(), completion.end());
  for (std::size_t i = 0; i < result.plan.steps.size(); ++i) {
    const Vec3d p = result.plan.steps[i].cam.position();
    if (result.prior.inside_margin({p.x(), p.z()}) < kCameraHullMargin) {
      throw PipelineError("trajectory",
                          std::string(to_string(result.plan.steps[i].purpose)) + " camera is not inside the room shell",
                          static_cast<int>(i));
    }
  }

  if (config.debug_dir) {
    std::filesystem::create_directories(*config.debug_dir);
    const std::string traj = trajectory_to_json(result.plan.steps).dump(2);
    write_file(*config.debug_dir / "trajectory.json", std::vector<std::uint8_t>(traj.begin(), traj.end()));
    write_mesh(*config.debug_dir / "prior.ply", result.prior.mesh, MeshFormat::kPly);
    write_mesh(*config.debug_dir / "stage1.ply", unified, MeshFormat::kPly);
  }

  BlendState state;
  state.mesh = std::move(unified);
  state.prior = result.prior;
  state.plan = result.plan;
  state.weights = config.weights;
  for (std::size_t i = 0; i < result.plan.steps.size(); ++i) {
    IterationReport report = blend_iteration(state, result.plan.steps[i], backends, options, static_cast<int>(i));
    if (config.debug_dir) dump_iteration(*config.debug_dir, report);
    if (observer) observer(report, state);
    if (!keep_images) report.images.reset();
    result.reports.push_back(std::move(report));
  }
  result.mesh = std::move(state.mesh);
  return result;
}

PipelineResult run_pipeline(const PipelineConfig& config, const BackendSet& backends, const IterationObserver& observer) {
  if (const auto problem = config_problem(config); !problem.empty()) throw PipelineError("config", problem);
  std::vector<InputImage> inputs;
  for (const auto& path : config.input_paths) {
    try {
      inputs.push_back({path.filename().string(), read_image(path)});
    } catch (const std::exception& e) {
      throw PipelineError("ingest", "cannot read " + path.string() + ": " + e.what());
    }
  }
  return run_pipeline(inputs, config, backends, observer);
}

nlohmann::json run_manifest(const PipelineConfig& config, const BackendSet& backends, const PipelineResult& result,
                            const std::string& output_sha256) {
  using nlohmann::json;
  json inputs = json::array();
  for (const auto& path : config.input_paths) {
    std::string digest;
    try {
      const auto bytes = read_file(path);
      digest = sha256_hex(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    } catch (const std::exception&) {
      digest = "";
    }
    inputs.push_back({{"path", path.generic_string()}, {"sha256", digest}});
  }
  int blend_steps = 0, applied = 0;
  for (const auto& s : result.plan.steps) blend_steps += s.purpose == StepPurpose::kBlend;
  for (const auto& r : result.reports) applied += !r.skipped;
  return {
      {"tool", "spaceblender"},
      {"config", config_to_json(config)},
      {"config_hash", config_hash(config)},
      {"seed", config.seed},
      {"backends", backends.identities()},
      {"inputs", inputs},
      {"output",
       {{"path", config.output_path.generic_string()},
        {"format", to_string(config.resolved_format())},
        {"sha256", output_sha256},
        {"vertices", result.mesh.vertex_count()},
        {"faces", result.mesh.face_count()}}},
      {"plan",
       {{"blend_steps", blend_steps},
        {"completion_steps", static_cast<int>(result.plan.steps.size()) - blend_steps},
        {"iterations_applied", applied},
        {"intermediate_submeshes", result.intermediates.size()},
        {"prior_height_m", result.prior.height_m}}},
      {"warnings", result.warnings},
  };
}

}  // namespace spaceblender
