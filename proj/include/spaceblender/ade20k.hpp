#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spaceblender::ade20k {

// Class ids (0-based, as in the published 150-class palette).
inline constexpr std::int32_t kWall = 0;
inline constexpr std::int32_t kFloor = 3;
inline constexpr std::int32_t kCeiling = 5;
inline constexpr std::int32_t kBed = 7;
inline constexpr std::int32_t kCabinet = 10;
inline constexpr std::int32_t kPerson = 12;
inline constexpr std::int32_t kPlant = 17;
inline constexpr std::int32_t kSofa = 23;
inline constexpr std::int32_t kRug = 28;
inline constexpr std::int32_t kClassCount = 150;

struct Entry {
  std::int32_t id;
  std::string name;
  std::array<std::uint8_t, 3> rgb;
};

/// The shipped palette table (resources/ade20k_palette.csv), parsed once.
const std::vector<Entry>& palette();

/// Parses a palette CSV with header `id,name,r,g,b`. Throws on malformed rows.
std::vector<Entry> parse_palette_csv(std::string_view csv);

/// Palette color of `id` scaled to [0,1]. Throws std::out_of_range.
Eigen::Vector3f color(std::int32_t id);

const std::string& name(std::int32_t id);

/// Default floor-like classes used for floor extraction.
inline std::vector<std::int32_t> default_floor_labels() { return {kFloor, kRug}; }

inline bool is_structural(std::int32_t id) { return id == kWall || id == kFloor || id == kCeiling; }

}  // namespace spaceblender::ade20k
