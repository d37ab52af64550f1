#pragma once

#include "spaceblender/backends.hpp"
#include "spaceblender/mesh_io.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace spaceblender {

/// Invalid configuration; the CLI maps it to a usage error.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Per-channel ControlNet weights.
struct ConditioningWeights {
  double layout = 0.6;
  double depth = 0.3;
  double semantic = 0.0;

  bool operator==(const ConditioningWeights&) const = default;
};

/// Parses "L,D,S".
ConditioningWeights parse_weights(std::string_view text);

enum class BackendMode { kSynthetic, kRemote };

BackendMode backend_mode_from_string(std::string_view name);
const char* to_string(BackendMode mode);

struct ConditioningModels {
  std::string layout = "control_v11p_sd15_layout";
  std::string depth = "control_v11f1p_sd15_depth";
  std::string semantic = "control_v11p_sd15_seg";
};

struct PipelineConfig {
  std::vector<std::filesystem::path> input_paths;
  double diameter_m = 6.0;
  std::uint64_t seed = 0;
  ConditioningWeights weights;
  BackendMode backend_mode = BackendMode::kSynthetic;
  std::optional<std::string> endpoint;
  std::string theme;
  std::filesystem::path output_path = "scene.ply";
  /// Derived from the output extension when unset.
  std::optional<MeshFormat> export_format;
  /// Debug artifacts are written when set.
  std::optional<std::filesystem::path> debug_dir;
  std::vector<std::int32_t> floor_labels = {3, 28};
  ConditioningModels models;
  std::string inpaint_route = "/sdapi/v1/img2img";
  std::string sampler = "Euler a";
  int sampler_steps = 30;

  bool debug_dump() const { return debug_dir.has_value(); }
  MeshFormat resolved_format() const;
};

/// Parses the key/value config text. Relative input, output and debug paths
/// are resolved against `base_dir` when it is non-empty. Throws ConfigError
/// with a line number on malformed input or unknown keys.
PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

/// Empty when the config is usable, otherwise the first problem found.
std::string config_problem(const PipelineConfig& config);
/// Throws ConfigError when config_problem is non-empty.
void validate_config(const PipelineConfig& config);

nlohmann::json config_to_json(const PipelineConfig& config);
/// SHA-256 of the canonical JSON form of the config.
std::string config_hash(const PipelineConfig& config);

/// Synthetic backends, with the remote inpainting client in remote mode.
BackendSet make_backend_set(const PipelineConfig& config);

}  // namespace spaceblender
