#include "spaceblender/config.hpp"

#include "spaceblender/encoding.hpp"
#include "spaceblender/remote_inpaint.hpp"
#include "spaceblender/synthetic.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace spaceblender {
namespace {

struct Value {
  std::string text;
  bool quoted = false;
};

[[noreturn]] void fail(int line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Drops a trailing comment that starts outside quotes.
std::string_view strip_comment(std::string_view raw) {
  bool in_quotes = false;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (in_quotes && raw[i] == '\\') {
      ++i;
    } else if (raw[i] == '"') {
      in_quotes = !in_quotes;
    } else if (!in_quotes && raw[i] == '#') {
      return raw.substr(0, i);
    }
  }
  return raw;
}

// Splits a value into comma-separated items. Items are quoted strings with
// \\ \" \n \t escapes or bare tokens; brackets around the list are optional.
std::vector<Value> split_values(std::string_view raw, int line) {
  auto body = trim(strip_comment(raw));
  if (!body.empty() && body.front() == '[') {
    if (body.back() != ']') fail(line, "unbalanced '['");
    body = trim(body.substr(1, body.size() - 2));
  }
  std::vector<Value> items;
  if (body.empty()) return items;
  std::size_t i = 0;
  while (true) {
    while (i < body.size() && std::isspace(static_cast<unsigned char>(body[i]))) ++i;
    Value v;
    if (i < body.size() && body[i] == '"') {
      v.quoted = true;
      ++i;
      bool closed = false;
      for (; i < body.size(); ++i) {
        const char c = body[i];
        if (c == '"') {
          closed = true;
          ++i;
          break;
        }
        if (c != '\\') {
          v.text += c;
          continue;
        }
        if (++i >= body.size()) fail(line, "dangling escape");
        switch (body[i]) {
          case 'n': v.text += '\n'; break;
          case 't': v.text += '\t'; break;
          case '"': v.text += '"'; break;
          case '\\': v.text += '\\'; break;
          default: fail(line, std::string("unknown escape \\") + body[i]);
        }
      }
      if (!closed) fail(line, "unterminated string");
      while (i < body.size() && std::isspace(static_cast<unsigned char>(body[i]))) ++i;
      if (i < body.size() && body[i] != ',') fail(line, "text after closing quote");
    } else {
      const auto comma = body.find(',', i);
      const auto token = trim(body.substr(i, comma == std::string_view::npos ? std::string_view::npos : comma - i));
      if (token.empty()) fail(line, "empty list item");
      if (token.find('"') != std::string_view::npos) fail(line, "unexpected quote");
      v.text = std::string(token);
      i = comma == std::string_view::npos ? body.size() : comma;
    }
    items.push_back(std::move(v));
    if (i >= body.size()) break;
    ++i;  // comma
    if (trim(body.substr(i)).empty()) fail(line, "trailing comma");
  }
  return items;
}

double to_double(const Value& v, int line, const std::string& key) {
  if (v.quoted) fail(line, key + ": expected a number");
  double out = 0.0;
  const auto* b = v.text.data();
  const auto* e = b + v.text.size();
  const auto [p, ec] = std::from_chars(b, e, out);
  if (ec != std::errc() || p != e) fail(line, key + ": '" + v.text + "' is not a number");
  return out;
}

long long to_integer(const Value& v, int line, const std::string& key) {
  if (v.quoted) fail(line, key + ": expected an integer");
  long long out = 0;
  const auto* b = v.text.data();
  const auto* e = b + v.text.size();
  const auto [p, ec] = std::from_chars(b, e, out);
  if (ec != std::errc() || p != e) fail(line, key + ": '" + v.text + "' is not an integer");
  return out;
}

std::uint64_t to_seed(const Value& v, int line) {
  if (v.quoted) fail(line, "seed: expected an integer");
  std::uint64_t out = 0;
  const auto* b = v.text.data();
  const auto* e = b + v.text.size();
  const auto [p, ec] = std::from_chars(b, e, out);
  if (ec != std::errc() || p != e) fail(line, "seed: '" + v.text + "' is not a non-negative integer");
  return out;
}

const Value& single(const std::vector<Value>& values, int line, const std::string& key) {
  if (values.size() != 1) fail(line, key + ": expected one value, got " + std::to_string(values.size()));
  return values.front();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (base.empty() || path.is_absolute()) return path;
  return base / path;
}

}  // namespace

ConditioningWeights parse_weights(std::string_view text) {
  std::vector<double> w;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    const auto item = trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    double v = 0.0;
    const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || p != item.data() + item.size()) {
      throw ConfigError("weights: '" + std::string(item) + "' is not a number");
    }
    w.push_back(v);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (w.size() != 3) throw ConfigError("weights: expected three values L,D,S");
  return {w[0], w[1], w[2]};
}

BackendMode backend_mode_from_string(std::string_view name) {
  if (name == "synthetic") return BackendMode::kSynthetic;
  if (name == "remote") return BackendMode::kRemote;
  throw ConfigError("unknown backend '" + std::string(name) + "' (expected synthetic or remote)");
}

const char* to_string(BackendMode mode) { return mode == BackendMode::kRemote ? "remote" : "synthetic"; }

MeshFormat PipelineConfig::resolved_format() const {
  if (export_format) return *export_format;
  const auto ext = output_path.extension().string();
  if (ext == ".obj") return MeshFormat::kObj;
  if (ext == ".gltf") return MeshFormat::kGltf;
  return MeshFormat::kPly;
}

PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  PipelineConfig cfg;
  std::set<std::string> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected 'key = value'");
    const std::string key(trim(stripped.substr(0, eq)));
    if (key.empty()) fail(line_no, "missing key");
    if (!seen.insert(key).second) fail(line_no, "duplicate key '" + key + "'");
    const auto values = split_values(stripped.substr(eq + 1), line_no);

    try {
      if (key == "images") {
        cfg.input_paths.clear();
        for (const auto& v : values) cfg.input_paths.push_back(resolve(base_dir, v.text));
      } else if (key == "diameter") {
        cfg.diameter_m = to_double(single(values, line_no, key), line_no, key);
      } else if (key == "seed") {
        cfg.seed = to_seed(single(values, line_no, key), line_no);
      } else if (key == "weights") {
        if (values.size() != 3) fail(line_no, "weights: expected three values");
        cfg.weights = {to_double(values[0], line_no, key), to_double(values[1], line_no, key),
                       to_double(values[2], line_no, key)};
      } else if (key == "backend") {
        cfg.backend_mode = backend_mode_from_string(single(values, line_no, key).text);
      } else if (key == "endpoint") {
        const auto& v = single(values, line_no, key).text;
        cfg.endpoint = v.empty() ? std::nullopt : std::optional<std::string>(v);
      } else if (key == "theme") {
        cfg.theme = values.empty() ? "" : single(values, line_no, key).text;
      } else if (key == "out") {
        cfg.output_path = resolve(base_dir, single(values, line_no, key).text);
      } else if (key == "format") {
        cfg.export_format = mesh_format_from_string(single(values, line_no, key).text);
      } else if (key == "debug_dir") {
        const auto& v = single(values, line_no, key).text;
        cfg.debug_dir = v.empty() ? std::nullopt : std::optional<std::filesystem::path>(resolve(base_dir, v));
      } else if (key == "floor_labels") {
        cfg.floor_labels.clear();
        for (const auto& v : values) cfg.floor_labels.push_back(static_cast<std::int32_t>(to_integer(v, line_no, key)));
      } else if (key == "layout_model") {
        cfg.models.layout = single(values, line_no, key).text;
      } else if (key == "depth_model") {
        cfg.models.depth = single(values, line_no, key).text;
      } else if (key == "semantic_model") {
        cfg.models.semantic = single(values, line_no, key).text;
      } else if (key == "inpaint_route") {
        cfg.inpaint_route = single(values, line_no, key).text;
      } else if (key == "sampler") {
        cfg.sampler = single(values, line_no, key).text;
      } else if (key == "sampler_steps") {
        cfg.sampler_steps = static_cast<int>(to_integer(single(values, line_no, key), line_no, key));
      } else {
        fail(line_no, "unknown key '" + key + "'");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      fail(line_no, e.what());
    }
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string config_problem(const PipelineConfig& c) {
  if (c.input_paths.empty()) return "at least one input image is required";
  if (!(c.diameter_m > 0.0) || !std::isfinite(c.diameter_m)) return "diameter must be positive";
  for (const double w : {c.weights.layout, c.weights.depth, c.weights.semantic}) {
    if (!(w >= 0.0 && w <= 1.0)) return "conditioning weights must lie in [0,1]";
  }
  if (c.backend_mode == BackendMode::kRemote && (!c.endpoint || c.endpoint->empty())) {
    return "remote backend requires an endpoint";
  }
  if (c.endpoint && c.endpoint->rfind("http://", 0) != 0) return "endpoint must be an http:// URL";
  if (c.output_path.empty()) return "output path is empty";
  if (c.floor_labels.empty()) return "floor_labels must not be empty";
  for (const auto l : c.floor_labels)
    if (l < 0 || l >= 150) return "floor label " + std::to_string(l) + " is not an ADE20K class";
  if (c.sampler_steps <= 0) return "sampler_steps must be positive";
  if (c.inpaint_route.empty() || c.inpaint_route.front() != '/') return "inpaint_route must start with '/'";
  return {};
}

void validate_config(const PipelineConfig& config) {
  if (const auto p = config_problem(config); !p.empty()) throw ConfigError(p);
}

nlohmann::json config_to_json(const PipelineConfig& c) {
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& p : c.input_paths) inputs.push_back(p.generic_string());
  return {
      {"images", inputs},
      {"diameter", c.diameter_m},
      {"seed", c.seed},
      {"weights", {c.weights.layout, c.weights.depth, c.weights.semantic}},
      {"backend", to_string(c.backend_mode)},
      {"endpoint", c.endpoint ? nlohmann::json(*c.endpoint) : nlohmann::json(nullptr)},
      {"theme", c.theme},
      {"out", c.output_path.generic_string()},
      {"format", to_string(c.resolved_format())},
      {"debug_dir", c.debug_dir ? nlohmann::json(c.debug_dir->generic_string()) : nlohmann::json(nullptr)},
      {"floor_labels", c.floor_labels},
      {"layout_model", c.models.layout},
      {"depth_model", c.models.depth},
      {"semantic_model", c.models.semantic},
      {"inpaint_route", c.inpaint_route},
      {"sampler", c.sampler},
      {"sampler_steps", c.sampler_steps},
  };
}

std::string config_hash(const PipelineConfig& config) { return sha256_hex(config_to_json(config).dump()); }

BackendSet make_backend_set(const PipelineConfig& config) {
  BackendSet set = synthetic::make_backends();
  if (config.backend_mode == BackendMode::kRemote) {
    if (!config.endpoint) throw ConfigError("remote backend requires an endpoint");
    RemoteInpaintOptions opt;
    opt.endpoint = *config.endpoint;
    opt.route = config.inpaint_route;
    opt.sampler = config.sampler;
    opt.steps = config.sampler_steps;
    set.inpaint = std::make_shared<RemoteInpaintBackend>(opt);
  }
  return set;
}

}  // namespace spaceblender
