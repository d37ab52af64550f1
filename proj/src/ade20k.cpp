#include "spaceblender/ade20k.hpp"

#include <charconv>
#include <sstream>
#include <stdexcept>

namespace spaceblender::resources {
extern const std::string_view ade20k_palette;
}

namespace spaceblender::ade20k {
namespace {

int parse_int(std::string_view field, std::string_view line) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw std::runtime_error("ade20k palette: bad integer in row '" + std::string(line) + "'");
  }
  return value;
}

}  // namespace

std::vector<Entry> parse_palette_csv(std::string_view csv) {
  std::vector<Entry> entries;
  std::istringstream in{std::string(csv)};
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    // id,name,r,g,b -- names contain no commas in the shipped table.
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos; rest.remove_prefix(pos + 1)) {
      fields.push_back(rest.substr(0, pos));
    }
    fields.push_back(rest);
    if (fields.size() != 5) throw std::runtime_error("ade20k palette: expected 5 fields in '" + line + "'");
    Entry e;
    e.id = parse_int(fields[0], line);
    e.name = std::string(fields[1]);
    for (int c = 0; c < 3; ++c) {
      const int v = parse_int(fields[2 + c], line);
      if (v < 0 || v > 255) throw std::runtime_error("ade20k palette: channel out of range in '" + line + "'");
      e.rgb[c] = static_cast<std::uint8_t>(v);
    }
    if (e.id != static_cast<std::int32_t>(entries.size())) {
      throw std::runtime_error("ade20k palette: ids must be dense and ordered");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

const std::vector<Entry>& palette() {
  static const std::vector<Entry> table = parse_palette_csv(resources::ade20k_palette);
  return table;
}

Eigen::Vector3f color(std::int32_t id) {
  const auto& table = palette();
  if (id < 0 || id >= static_cast<std::int32_t>(table.size())) {
    throw std::out_of_range("ade20k: unknown class id " + std::to_string(id));
  }
  const auto& rgb = table[static_cast<std::size_t>(id)].rgb;
  return {rgb[0] / 255.f, rgb[1] / 255.f, rgb[2] / 255.f};
}

const std::string& name(std::int32_t id) {
  const auto& table = palette();
  if (id < 0 || id >= static_cast<std::int32_t>(table.size())) {
    throw std::out_of_range("ade20k: unknown class id " + std::to_string(id));
  }
  return table[static_cast<std::size_t>(id)].name;
}

}  // namespace spaceblender::ade20k
