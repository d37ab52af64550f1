#pragma once

#include "spaceblender/layout.hpp"

#include <json.hpp>

#include <optional>
#include <string_view>
#include <vector>

namespace spaceblender {

inline constexpr int kWideWidth = 1280;
inline constexpr int kWideHeight = 512;
inline constexpr int kStepSize = 512;

inline constexpr int kSweepYaws = 8;
inline constexpr int kSweepPitchSteps = 6;
inline constexpr double kSweepPitchNear = 20.0;
inline constexpr double kSweepPitchFar = 75.0;
inline constexpr int kSubmeshPathSteps = 5;
inline constexpr int kLookAroundYaws = 8;
inline constexpr double kLookAroundYawJitter = 10.0;
inline constexpr double kLookAroundPitchJitter = 5.0;

enum class StepPurpose { kBlend, kFloor, kCeiling, kSubmeshPath, kLookAround, kFloorGeneration };

const char* to_string(StepPurpose purpose);
StepPurpose purpose_from_string(std::string_view name);

struct TrajectoryStep {
  CameraView cam;
  StepPurpose purpose = StepPurpose::kBlend;
  /// Yaw whose region prompt the step should use.
  std::optional<double> prompt_hint;
};

/// One wide frame per pair of adjacent occupied yaws, from the center at eye
/// height, yawed to the pair's midpoint; ordered by yaw. Throws
/// std::invalid_argument with fewer than two occupied yaws.
std::vector<TrajectoryStep> blending_viewpoints(const PlacedLayout& layout);

/// Yaw midpoints of adjacent occupied yaws, ascending.
std::vector<double> blend_yaws(const std::vector<double>& occupied_yaws);

/// Front center of an occupied yaw on the circle, at eye height.
Vec3d circle_point(const PlacedLayout& layout, double yaw_deg, double height = kEyeHeight);

/// Floor sweep, ceiling sweep, per-submesh paths and the look-around pass, in
/// that order. Deterministic for a fixed seed.
std::vector<TrajectoryStep> completion_trajectories(const PlacedLayout& layout, std::uint64_t rng_seed);

nlohmann::json trajectory_to_json(const std::vector<TrajectoryStep>& steps);
std::vector<TrajectoryStep> trajectory_from_json(const nlohmann::json& doc);

}  // namespace spaceblender
