#include "spaceblender/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <regex>
#include <set>
#include <sstream>

namespace spaceblender::resources {
extern const std::string_view system_prompt;
}

namespace spaceblender {
namespace {

constexpr std::string_view kKnownMarker = "already taken: ";
constexpr std::string_view kKnownEnd = ". What do you expect for the following Y rotation values: ";
constexpr std::string_view kUnknownEnd = "? Consider the theme of";

constexpr std::string_view kFloorSystemPrompt =
    "You are a helpful assistant that acts like a creative interior architect. Given the caption of "
    "a photograph of an indoor space, describe the floor you expect in that space. Answer with a "
    "single line that starts with '... space with' where '...' is the type of the room, and name "
    "the floor material. Keep it under 20 words.";

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string single_line(std::string_view s) {
  std::string out = trim(s);
  std::replace_if(out.begin(), out.end(), [](char c) { return c == '\n' || c == '\r'; }, ' ');
  return out;
}

nlohmann::json yaw_json(double yaw) {
  const double r = std::round(yaw * 10.0) / 10.0;
  if (r == std::floor(r)) return static_cast<long>(r);
  return r;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string format_meters(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

}  // namespace

std::string_view region_system_prompt() { return resources::system_prompt; }

std::string region_user_message(const std::vector<std::pair<double, std::string>>& known,
                                const std::vector<double>& unknown_yaws, const RoomSize& room,
                                std::string_view theme) {
  nlohmann::json known_json = nlohmann::json::array();
  for (const auto& [yaw, text] : known) known_json.push_back({{"y_rotation", yaw_json(yaw)}, {"description", text}});
  nlohmann::json unknown_json = nlohmann::json::array();
  for (const double yaw : unknown_yaws) unknown_json.push_back(yaw_json(yaw));

  std::string msg = "The size of the room is " + format_meters(room.width) + "x" + format_meters(room.height) +
                    "x" + format_meters(room.length) +
                    " (WxHxL) meters and the camera is positioned in the middle. These are the Y rotation "
                    "values and descriptions of the images that were ";
  msg += kKnownMarker;
  msg += known_json.dump();
  msg += kKnownEnd;
  msg += unknown_json.dump();
  msg += kUnknownEnd;
  msg += " \"" + std::string(theme) + "\" when coming up with the descriptions";
  return msg;
}

ParsedRegionMessage parse_region_user_message(std::string_view message) {
  const auto k0 = message.find(kKnownMarker);
  const auto k1 = message.find(kKnownEnd);
  const auto u1 = message.find(kUnknownEnd);
  if (k0 == std::string_view::npos || k1 == std::string_view::npos || u1 == std::string_view::npos ||
      k1 < k0 || u1 < k1) {
    throw std::invalid_argument("region message: unexpected format");
  }
  const auto known_text = message.substr(k0 + kKnownMarker.size(), k1 - k0 - kKnownMarker.size());
  const auto unknown_text = message.substr(k1 + kKnownEnd.size(), u1 - k1 - kKnownEnd.size());
  ParsedRegionMessage out;
  for (const auto& item : nlohmann::json::parse(known_text)) {
    out.known.emplace_back(item.at("y_rotation").get<double>(), item.at("description").get<std::string>());
  }
  for (const auto& yaw : nlohmann::json::parse(unknown_text)) out.unknown_yaws.push_back(yaw.get<double>());
  return out;
}

nlohmann::json set_description_schema() {
  return {
      {"name", kSetDescriptionFunction},
      {"description", "Set the descriptions of the images at the requested Y rotation values."},
      {"parameters",
       {{"type", "object"},
        {"properties",
         {{"descriptions",
           {{"type", "array"},
            {"items",
             {{"type", "object"},
              {"properties",
               {{"y_rotation", {{"type", "number"}}}, {"description", {{"type", "string"}}}}},
              {"required", {"y_rotation", "description"}}}}}}}},
        {"required", {"descriptions"}}}}};
}

int count_words(std::string_view text) {
  std::istringstream in{std::string(text)};
  int n = 0;
  for (std::string w; in >> w;) ++n;
  return n;
}

std::string region_description_problem(std::string_view description) {
  static const std::regex prefix(R"(^\S.*\bspace with\b)");
  if (description.find('\n') != std::string_view::npos) return "description spans several lines";
  const int words = count_words(description);
  if (words == 0) return "description is empty";
  if (words > kMaxDescriptionWords) {
    return "description has " + std::to_string(words) + " words, more than " +
           std::to_string(kMaxDescriptionWords);
  }
  if (!std::regex_search(std::string(description), prefix)) {
    return "description does not start with '... space with'";
  }
  return {};
}

std::string room_type_of(std::string_view description) {
  const std::string text = trim(description);
  const auto pos = text.find(" space with");
  if (pos == std::string::npos || pos == 0) return "room";
  return text.substr(0, pos);
}

std::string strip_person_terms(std::string_view caption) {
  static const std::set<std::string> person_words{
      "person", "persons", "people", "man",  "men",     "woman",  "women",  "child", "children",
      "boy",    "girl",    "kid",    "kids", "someone", "person,", "people,"};
  std::istringstream in{std::string(caption)};
  std::vector<std::string> kept;
  for (std::string w; in >> w;) {
    std::string bare = lower(w);
    const bool comma = !bare.empty() && bare.back() == ',';
    if (comma) bare.pop_back();
    if (person_words.contains(bare)) {
      if (!kept.empty() && (lower(kept.back()) == "a" || lower(kept.back()) == "an")) kept.pop_back();
      // Dropping the last list item: "x, y and person" becomes "x and y".
      if (!kept.empty() && kept.back() == "and") {
        kept.pop_back();
        for (std::size_t j = kept.size(); j-- > 0;) {
          if (kept[j].back() != ',') continue;
          kept[j].pop_back();
          kept.insert(kept.begin() + std::ptrdiff_t(j) + 1, "and");
          break;
        }
      }
      if (comma && !kept.empty() && kept.back().back() != ',') kept.back() += ',';
      continue;
    }
    kept.push_back(w);
  }
  // Tidy list joints left behind: "x, and" / trailing "and" / trailing comma.
  for (bool changed = true; changed;) {
    changed = false;
    if (!kept.empty() && (kept.back() == "and" || kept.back() == "with")) {
      kept.pop_back();
      changed = true;
    }
    if (!kept.empty() && kept.back().back() == ',') {
      kept.back().pop_back();
      changed = true;
    }
    for (std::size_t i = 0; i + 1 < kept.size(); ++i) {
      if (kept[i].back() == ',' && kept[i + 1] == "and") {
        kept[i].pop_back();
        changed = true;
      }
    }
  }
  std::string out;
  for (const auto& w : kept) out += (out.empty() ? "" : " ") + w;
  return out;
}

std::string caption_image(const ColorImage& img, CaptionBackend& vlm) {
  std::string text = single_line(vlm.caption(img));
  if (text.empty()) throw PipelineError("prompts", "caption backend returned an empty caption");
  return text;
}

std::vector<RegionPrompt> infer_region_prompts(const std::vector<std::pair<double, std::string>>& known,
                                               const std::vector<double>& unknown_yaws,
                                               const RoomSize& room, LlmBackend& llm,
                                               std::string_view theme) {
  if (unknown_yaws.empty()) throw std::invalid_argument("infer_region_prompts: no unknown yaws");
  for (const double yaw : unknown_yaws) {
    if (!(yaw >= 0.0 && yaw < 360.0)) throw std::invalid_argument("infer_region_prompts: yaw outside [0,360)");
  }

  std::vector<std::optional<std::string>> accepted(unknown_yaws.size());
  std::vector<std::string> problems;
  for (int attempt = 0; attempt <= kPromptRetries; ++attempt) {
    std::vector<double> pending;
    for (std::size_t i = 0; i < unknown_yaws.size(); ++i)
      if (!accepted[i]) pending.push_back(unknown_yaws[i]);
    if (pending.empty()) break;

    LlmRequest request;
    request.messages.push_back({"system", std::string(region_system_prompt())});
    std::string user = region_user_message(known, pending, room, theme);
    if (!problems.empty()) {
      user += "\n\nYour previous reply was rejected:";
      for (const auto& p : problems) user += "\n- " + p;
      user += "\nOnly return the descriptions with the set_description function.";
    }
    request.messages.push_back({"user", std::move(user)});
    request.functions.push_back(set_description_schema());

    problems.clear();
    const LlmReply reply = llm.complete(request);
    if (!reply.function_call || reply.function_call->name != kSetDescriptionFunction) {
      problems.push_back("reply did not call set_description");
      continue;
    }
    nlohmann::json args;
    try {
      args = nlohmann::json::parse(reply.function_call->arguments);
    } catch (const nlohmann::json::exception& e) {
      problems.push_back(std::string("set_description arguments are not valid JSON: ") + e.what());
      continue;
    }
    if (!args.contains("descriptions") || !args["descriptions"].is_array()) {
      problems.push_back("set_description arguments lack a 'descriptions' array");
      continue;
    }
    for (const auto& item : args["descriptions"]) {
      if (!item.is_object() || !item.contains("y_rotation") || !item["y_rotation"].is_number() ||
          !item.contains("description") || !item["description"].is_string()) {
        problems.push_back("malformed description entry");
        continue;
      }
      const double yaw = item["y_rotation"].get<double>();
      const std::string text = trim(item["description"].get<std::string>());
      for (std::size_t i = 0; i < unknown_yaws.size(); ++i) {
        if (accepted[i] || circular_distance_deg(unknown_yaws[i], yaw) > 0.5) continue;
        const std::string problem = region_description_problem(text);
        if (problem.empty()) {
          accepted[i] = text;
        } else {
          problems.push_back("Y rotation " + yaw_json(unknown_yaws[i]).dump() + ": " + problem);
        }
      }
    }
    for (std::size_t i = 0; i < unknown_yaws.size(); ++i) {
      if (!accepted[i] && std::find(pending.begin(), pending.end(), unknown_yaws[i]) != pending.end()) {
        const std::string tag = "Y rotation " + yaw_json(unknown_yaws[i]).dump();
        const bool reported = std::any_of(problems.begin(), problems.end(),
                                          [&](const std::string& p) { return p.rfind(tag, 0) == 0; });
        if (!reported) problems.push_back(tag + ": no description returned");
      }
    }
  }

  std::vector<RegionPrompt> out;
  std::string offending;
  for (std::size_t i = 0; i < unknown_yaws.size(); ++i) {
    if (!accepted[i]) {
      offending += (offending.empty() ? "" : ", ") + yaw_json(unknown_yaws[i]).dump();
      continue;
    }
    out.push_back({unknown_yaws[i], *accepted[i]});
  }
  if (!offending.empty()) {
    throw PipelineError("prompts", "no valid description after " + std::to_string(kPromptRetries) +
                                       " retries for yaws: " + offending);
  }
  return out;
}

const RegionPrompt& nearest_prompt(double yaw_deg, const std::vector<RegionPrompt>& prompts) {
  if (prompts.empty()) throw std::invalid_argument("nearest_prompt: no prompts");
  const RegionPrompt* best = &prompts.front();
  double best_dist = circular_distance_deg(yaw_deg, best->yaw_deg);
  for (const auto& p : prompts) {
    const double d = circular_distance_deg(yaw_deg, p.yaw_deg);
    if (d < best_dist - 1e-9 ||
        (std::abs(d - best_dist) <= 1e-9 && wrap_degrees(p.yaw_deg) < wrap_degrees(best->yaw_deg))) {
      best = &p;
      best_dist = d;
    }
  }
  return *best;
}

const std::string& select_prompt_for_view(const CameraView& cam, const std::vector<RegionPrompt>& prompts) {
  return nearest_prompt(cam.view_yaw_deg(), prompts).description;
}

const std::vector<std::string>& floor_material_allowlist() {
  static const std::vector<std::string> words{
      "wood",  "wooden", "hardwood", "parquet", "laminate", "tile",     "tiled",  "tiles",
      "stone", "marble", "concrete", "carpet",  "carpeted", "vinyl",    "linoleum", "terrazzo",
      "slate", "bamboo", "cork",     "granite", "oak",      "rug"};
  return words;
}

std::string infer_floor_prompt(std::string_view caption, LlmBackend& llm) {
  const std::string cap = single_line(caption);
  if (cap.empty()) throw std::invalid_argument("infer_floor_prompt: empty caption");
  std::string feedback;
  for (int attempt = 0; attempt <= kPromptRetries; ++attempt) {
    LlmRequest request;
    request.messages.push_back({"system", std::string(kFloorSystemPrompt)});
    std::string user = "The caption of the image is \"" + cap + "\". Describe the floor of this space.";
    if (!feedback.empty()) user += "\n\nYour previous reply was rejected: " + feedback;
    request.messages.push_back({"user", std::move(user)});
    const LlmReply reply = llm.complete(request);
    const std::string text = single_line(reply.content);
    if (text.empty()) {
      feedback = "the reply was empty";
      continue;
    }
    std::istringstream in{lower(text)};
    bool has_material = false;
    for (std::string w; in >> w;) {
      while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.back()))) w.pop_back();
      const auto& allow = floor_material_allowlist();
      if (std::find(allow.begin(), allow.end(), w) != allow.end()) has_material = true;
    }
    if (!has_material) {
      feedback = "the reply does not name a floor material";
      continue;
    }
    return text;
  }
  throw PipelineError("prompts", "no floor description naming a material after " +
                                     std::to_string(kPromptRetries) + " retries");
}

}  // namespace spaceblender
