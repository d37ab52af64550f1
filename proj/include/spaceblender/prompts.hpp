#pragma once

#include "spaceblender/backends.hpp"
#include "spaceblender/core.hpp"

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace spaceblender {

inline constexpr std::string_view kSetDescriptionFunction = "set_description";
inline constexpr int kPromptRetries = 3;
inline constexpr int kMaxDescriptionWords = 20;

/// Text prompt for the region seen at `yaw_deg` from the layout center.
struct RegionPrompt {
  double yaw_deg = 0.0;
  std::string description;
};

struct RoomSize {
  double width = 0.0;
  double height = 0.0;
  double length = 0.0;
};

/// Region-description system prompt, sent verbatim.
std::string_view region_system_prompt();

/// User message for a region-description request.
std::string region_user_message(const std::vector<std::pair<double, std::string>>& known,
                                const std::vector<double>& unknown_yaws, const RoomSize& room,
                                std::string_view theme);

struct ParsedRegionMessage {
  std::vector<std::pair<double, std::string>> known;
  std::vector<double> unknown_yaws;
};

/// Inverse of region_user_message (ignores anything appended after it).
ParsedRegionMessage parse_region_user_message(std::string_view message);

/// OpenAI-style definition of the `set_description` function.
nlohmann::json set_description_schema();

/// Words separated by whitespace.
int count_words(std::string_view text);

/// Empty when `description` is acceptable, otherwise the reason.
std::string region_description_problem(std::string_view description);

/// Leading room type of a "<room> space with ..." text, "room" otherwise.
std::string room_type_of(std::string_view description);

/// Caption with person words (and their articles) removed.
std::string strip_person_terms(std::string_view caption);

std::string caption_image(const ColorImage& img, CaptionBackend& vlm);

/// One validated prompt per unknown yaw, in the order of `unknown_yaws`.
/// Invalid or missing descriptions are re-requested up to kPromptRetries times
/// with feedback; afterwards a PipelineError lists the offending yaws.
std::vector<RegionPrompt> infer_region_prompts(const std::vector<std::pair<double, std::string>>& known,
                                               const std::vector<double>& unknown_yaws,
                                               const RoomSize& room, LlmBackend& llm,
                                               std::string_view theme = "");

/// Description whose yaw is circularly closest to the camera's view yaw;
/// ties go to the smaller yaw.
const std::string& select_prompt_for_view(const CameraView& cam, const std::vector<RegionPrompt>& prompts);
const RegionPrompt& nearest_prompt(double yaw_deg, const std::vector<RegionPrompt>& prompts);

/// Floor materials a floor description must mention.
const std::vector<std::string>& floor_material_allowlist();

/// Single-line floor description for floor generation.
std::string infer_floor_prompt(std::string_view caption, LlmBackend& llm);

}  // namespace spaceblender
