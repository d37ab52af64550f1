#include "spaceblender/blend.hpp"
#include "spaceblender/config.hpp"
#include "spaceblender/encoding.hpp"
#include "spaceblender/image_io.hpp"
#include "spaceblender/mesh_io.hpp"
#include "spaceblender/synthetic.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>

namespace sb = spaceblender;

namespace {

constexpr int kExitPipeline = 1;
constexpr int kExitUsage = 2;

struct RunFlags {
  std::string config;
  std::vector<std::string> images;
  std::optional<double> diameter;
  std::optional<std::uint64_t> seed;
  std::string weights;
  std::string backend;
  std::string endpoint;
  std::optional<std::string> theme;
  std::string out;
  std::string format;
  std::string debug_dir;
  bool quiet = false;
};

void add_config_flags(CLI::App& cmd, RunFlags& f) {
  cmd.add_option("--config", f.config, "Config file (individual flags override it)");
  cmd.add_option("--images", f.images, "Input images")->delimiter(',');
  cmd.add_option("--diameter", f.diameter, "Layout circle diameter in meters");
  cmd.add_option("--seed", f.seed, "Random seed");
  cmd.add_option("--weights", f.weights, "Conditioning weights L,D,S");
  cmd.add_option("--backend", f.backend, "synthetic or remote");
  cmd.add_option("--endpoint", f.endpoint, "Inpainting server URL (remote backend)");
  cmd.add_option("--theme", f.theme, "Theme passed to the region prompt request");
  cmd.add_option("--debug-dir", f.debug_dir, "Directory for per-iteration debug artifacts");
  cmd.add_flag("--quiet,-q", f.quiet, "Suppress progress output");
}

sb::PipelineConfig resolve_config(const RunFlags& f) {
  sb::PipelineConfig cfg = f.config.empty() ? sb::PipelineConfig{} : sb::load_config(f.config);
  if (!f.images.empty()) cfg.input_paths.assign(f.images.begin(), f.images.end());
  if (f.diameter) cfg.diameter_m = *f.diameter;
  if (f.seed) cfg.seed = *f.seed;
  if (!f.weights.empty()) cfg.weights = sb::parse_weights(f.weights);
  if (!f.backend.empty()) cfg.backend_mode = sb::backend_mode_from_string(f.backend);
  if (!f.endpoint.empty()) cfg.endpoint = f.endpoint;
  if (f.theme) cfg.theme = *f.theme;
  if (!f.out.empty()) cfg.output_path = f.out;
  if (!f.format.empty()) {
    try {
      cfg.export_format = sb::mesh_format_from_string(f.format);
    } catch (const std::invalid_argument& e) {
      throw sb::ConfigError(e.what());
    }
  }
  if (!f.debug_dir.empty()) cfg.debug_dir = f.debug_dir;
  sb::validate_config(cfg);
  return cfg;
}

std::filesystem::path manifest_path(const std::filesystem::path& out) {
  std::filesystem::path p = out;
  p.replace_extension(".manifest.json");
  return p;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  sb::write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

int run_command(const RunFlags& flags) {
  const sb::PipelineConfig cfg = resolve_config(flags);
  const sb::BackendSet backends = sb::make_backend_set(cfg);
  const auto start = std::chrono::steady_clock::now();
  sb::IterationObserver progress;
  if (!flags.quiet) {
    progress = [](const sb::IterationReport& r, const sb::BlendState& s) {
      std::fprintf(stderr, "step %3d %-12s missing %6.2f%%  vertices %ld%s\n", r.step_index, sb::to_string(r.purpose),
                   100.0 * r.missing_fraction, static_cast<long>(s.mesh.vertex_count()), r.skipped ? "  (skipped)" : "");
    };
  }
  const sb::PipelineResult result = sb::run_pipeline(cfg, backends, progress);
  for (const auto& w : result.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

  if (cfg.output_path.has_parent_path()) std::filesystem::create_directories(cfg.output_path.parent_path());
  sb::write_mesh(cfg.output_path, result.mesh, cfg.resolved_format());
  const auto bytes = sb::read_file(cfg.output_path);
  const std::string digest =
      sb::sha256_hex(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  write_text(manifest_path(cfg.output_path), sb::run_manifest(cfg, backends, result, digest).dump(2) + "\n");
  if (!flags.quiet) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::fprintf(stderr, "wrote %s (%ld vertices, %ld faces) in %.1f s\n", cfg.output_path.string().c_str(),
                 static_cast<long>(result.mesh.vertex_count()), static_cast<long>(result.mesh.face_count()), secs);
  }
  return 0;
}

int plan_command(const RunFlags& flags) {
  const sb::PipelineConfig cfg = resolve_config(flags);
  const sb::BackendSet backends = sb::make_backend_set(cfg);
  std::vector<sb::InputImage> inputs;
  for (const auto& p : cfg.input_paths) {
    try {
      inputs.push_back({p.filename().string(), sb::read_image(p)});
    } catch (const std::exception& e) {
      throw sb::PipelineError("ingest", "cannot read " + p.string() + ": " + e.what());
    }
  }
  const auto s1 = sb::run_stage_one(inputs, cfg, backends);
  std::vector<sb::TrajectoryStep> steps;
  if (s1.layout.occupied_yaws().size() >= 2) steps = sb::blending_viewpoints(s1.layout);
  const auto completion = sb::completion_trajectories(s1.layout, cfg.seed);
  steps.insert(steps.end(), completion.begin(), completion.end());
  write_text(flags.out.empty() ? std::filesystem::path("trajectory.json") : std::filesystem::path(flags.out),
             sb::trajectory_to_json(steps).dump(2) + "\n");
  return 0;
}

int synth_scene_command(const std::string& scene, const std::string& out, const std::string& depth_out, int size) {
  const auto cam = sb::synthetic::default_capture_camera(size, size);
  sb::synthetic::SceneRender render;
  try {
    render = sb::synthetic::synthetic_scene_oracle(scene, cam);
  } catch (const std::invalid_argument& e) {
    throw sb::ConfigError(e.what());
  }
  sb::write_png(out, render.color);
  if (!depth_out.empty()) sb::write_depth_file(depth_out, render.depth);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blends several room photographs into one navigable mesh."};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "Run both pipeline stages and export the mesh");
  add_config_flags(*run, run_flags);
  run->add_option("--out", run_flags.out, "Output mesh path");
  run->add_option("--format", run_flags.format, "ply, obj or gltf (default: from the output extension)");

  RunFlags plan_flags;
  auto* plan = app.add_subcommand("plan", "Run Stage 1 and write the camera trajectory as JSON");
  add_config_flags(*plan, plan_flags);
  plan->add_option("--out", plan_flags.out, "Trajectory JSON path");

  std::string scene, scene_out, depth_out;
  int size = 512;
  auto* synth = app.add_subcommand("synth-scene", "Render a built-in analytic scene to PNG");
  synth->add_option("--scene", scene, "Scene id")->required();
  synth->add_option("--out", scene_out, "PNG path")->required();
  synth->add_option("--depth-out", depth_out, "Optional depth file path");
  synth->add_option("--size", size, "Square image size")->check(CLI::Range(2, 4096));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) return run_command(run_flags);
    if (*plan) return plan_command(plan_flags);
    if (*synth) return synth_scene_command(scene, scene_out, depth_out, size);
  } catch (const sb::ConfigError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const sb::PipelineError& e) {
    if (e.step_index() >= 0) {
      std::fprintf(stderr, "error: %s (step %d)\n", e.what(), e.step_index());
    } else {
      std::fprintf(stderr, "error: %s\n", e.what());
    }
    return kExitPipeline;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitPipeline;
  }
  return kExitUsage;
}
