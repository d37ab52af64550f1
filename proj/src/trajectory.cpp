#include "spaceblender/trajectory.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <stdexcept>

namespace spaceblender {
namespace {

constexpr std::array<std::pair<StepPurpose, std::string_view>, 6> kPurposeNames{{
    {StepPurpose::kBlend, "blend"},
    {StepPurpose::kFloor, "floor"},
    {StepPurpose::kCeiling, "ceiling"},
    {StepPurpose::kSubmeshPath, "submesh_path"},
    {StepPurpose::kLookAround, "look_around"},
    {StepPurpose::kFloorGeneration, "floor_generation"},
}};

Vec3d eye_center() { return {0.0, kEyeHeight, 0.0}; }

}  // namespace

const char* to_string(StepPurpose purpose) {
  for (const auto& [p, name] : kPurposeNames)
    if (p == purpose) return name.data();
  return "unknown";
}

StepPurpose purpose_from_string(std::string_view name) {
  for (const auto& [p, n] : kPurposeNames)
    if (n == name) return p;
  throw std::invalid_argument("unknown step purpose '" + std::string(name) + "'");
}

std::vector<double> blend_yaws(const std::vector<double>& occupied) {
  std::vector<double> yaws = occupied;
  for (auto& y : yaws) y = wrap_degrees(y);
  std::sort(yaws.begin(), yaws.end());
  std::vector<double> mids;
  if (yaws.size() < 2) return mids;
  for (std::size_t i = 0; i < yaws.size(); ++i) {
    const double a = yaws[i];
    const double gap = i + 1 < yaws.size() ? yaws[i + 1] - a : 360.0 - a + yaws.front();
    mids.push_back(wrap_degrees(a + 0.5 * gap));
  }
  std::sort(mids.begin(), mids.end());
  return mids;
}

std::vector<TrajectoryStep> blending_viewpoints(const PlacedLayout& layout) {
  const auto occupied = layout.occupied_yaws();
  if (occupied.size() < 2) throw std::invalid_argument("blending_viewpoints: fewer than two occupied yaws");
  std::vector<TrajectoryStep> steps;
  for (const double yaw : blend_yaws(occupied)) {
    steps.push_back({CameraView::look(eye_center(), yaw, 0.0, kWideWidth, kWideHeight), StepPurpose::kBlend, yaw});
  }
  return steps;
}

Vec3d circle_point(const PlacedLayout& layout, double yaw_deg, double height) {
  Vec3d p = layout.radius() * direction_from_yaw_pitch(yaw_deg, 0.0);
  p.y() = height;
  return p;
}

std::vector<TrajectoryStep> completion_trajectories(const PlacedLayout& layout, std::uint64_t rng_seed) {
  if (layout.placements.empty()) throw std::invalid_argument("completion_trajectories: empty layout");
  std::mt19937_64 rng(rng_seed);
  std::vector<TrajectoryStep> steps;

  // Floor, then ceiling: rings of pitch from the center.
  for (const auto& [purpose, sign] : {std::pair{StepPurpose::kFloor, -1.0}, std::pair{StepPurpose::kCeiling, 1.0}}) {
    for (int k = 0; k < kSweepPitchSteps; ++k) {
      const double t = double(k) / double(kSweepPitchSteps - 1);
      const double pitch = sign * (kSweepPitchNear + t * (kSweepPitchFar - kSweepPitchNear));
      for (int j = 0; j < kSweepYaws; ++j) {
        const double yaw = 360.0 * j / kSweepYaws;
        steps.push_back({CameraView::look(eye_center(), yaw, pitch), purpose, yaw});
      }
    }
  }

  // Center to each front center, turning towards a neighbour.
  const auto occupied = layout.occupied_yaws();
  std::bernoulli_distribution coin(0.5);
  for (std::size_t i = 0; i < occupied.size(); ++i) {
    const double yaw = occupied[i];
    const Vec3d end = circle_point(layout, yaw);
    double end_yaw = yaw;
    if (occupied.size() > 1) {
      const bool left = coin(rng);
      const double neighbour = left ? occupied[(i + occupied.size() - 1) % occupied.size()]
                                    : occupied[(i + 1) % occupied.size()];
      end_yaw = yaw_of(circle_point(layout, neighbour) - end);
    }
    const double turn = circular_delta_deg(yaw, end_yaw);
    for (int k = 0; k < kSubmeshPathSteps; ++k) {
      const double t = double(k) / double(kSubmeshPathSteps - 1);
      const Vec3d pos = eye_center() + t * (end - eye_center());
      const double step_yaw = wrap_degrees(yaw + t * turn);
      steps.push_back({CameraView::look(pos, step_yaw, 0.0), StepPurpose::kSubmeshPath, step_yaw});
    }
  }

  // Randomised look-around from every front center.
  std::uniform_real_distribution<double> yaw_jitter(-kLookAroundYawJitter, kLookAroundYawJitter);
  std::uniform_real_distribution<double> pitch_jitter(-kLookAroundPitchJitter, kLookAroundPitchJitter);
  for (const double yaw : occupied) {
    const Vec3d pos = circle_point(layout, yaw);
    for (int j = 0; j < kLookAroundYaws; ++j) {
      const double nominal = wrap_degrees(yaw + 360.0 * j / kLookAroundYaws);
      const double y = wrap_degrees(nominal + yaw_jitter(rng));
      const double p = pitch_jitter(rng);
      steps.push_back({CameraView::look(pos, y, p), StepPurpose::kLookAround, y});
    }
  }
  return steps;
}

nlohmann::json trajectory_to_json(const std::vector<TrajectoryStep>& steps) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& s = steps[i];
    nlohmann::json rot = nlohmann::json::array();
    for (int r = 0; r < 3; ++r)
      rot.push_back({s.cam.pose.rotation(r, 0), s.cam.pose.rotation(r, 1), s.cam.pose.rotation(r, 2)});
    nlohmann::json step{
        {"index", i},
        {"purpose", to_string(s.purpose)},
        {"position", {s.cam.pose.translation.x(), s.cam.pose.translation.y(), s.cam.pose.translation.z()}},
        {"rotation", rot},
        {"yaw_deg", s.cam.view_yaw_deg()},
        {"pitch_deg", s.cam.view_pitch_deg()},
        {"width", s.cam.width_px},
        {"height", s.cam.height_px},
        {"fov_vertical_deg", s.cam.fov_vertical_deg},
    };
    step["prompt_hint"] = s.prompt_hint ? nlohmann::json(*s.prompt_hint) : nlohmann::json(nullptr);
    out.push_back(std::move(step));
  }
  return {{"steps", out}};
}

std::vector<TrajectoryStep> trajectory_from_json(const nlohmann::json& doc) {
  std::vector<TrajectoryStep> steps;
  for (const auto& item : doc.at("steps")) {
    TrajectoryStep s;
    s.purpose = purpose_from_string(item.at("purpose").get<std::string>());
    const auto& pos = item.at("position");
    s.cam.pose.translation = Vec3d(pos.at(0).get<double>(), pos.at(1).get<double>(), pos.at(2).get<double>());
    const auto& rot = item.at("rotation");
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) s.cam.pose.rotation(r, c) = rot.at(r).at(c).get<double>();
    s.cam.width_px = item.at("width").get<int>();
    s.cam.height_px = item.at("height").get<int>();
    s.cam.fov_vertical_deg = item.at("fov_vertical_deg").get<double>();
    if (item.contains("prompt_hint") && !item["prompt_hint"].is_null()) s.prompt_hint = item["prompt_hint"].get<double>();
    if (!s.cam.is_valid()) throw std::invalid_argument("trajectory step with invalid camera");
    steps.push_back(s);
  }
  return steps;
}

}  // namespace spaceblender
