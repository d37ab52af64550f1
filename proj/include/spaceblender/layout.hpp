#pragma once

#include "spaceblender/lift3d.hpp"

#include <vector>

namespace spaceblender {

/// Largest angular gap between occupied yaws that one wide frame may bridge.
inline constexpr double kMaxOccupiedGapDeg = 120.0;
/// Inputs at or above this count need no intermediate submeshes.
inline constexpr int kIntermediateThreshold = 4;
/// Share of vertices nearest the capture camera that define the front center.
inline constexpr double kFrontFraction = 0.10;

struct Placement {
  int submesh_id = 0;
  /// Maps the submesh's frame into the unified space.
  RigidTransformd transform;
  double yaw_deg = 0.0;
  /// False when the submesh's floor could not be aligned.
  bool aligned = true;
};

struct IntermediateSlot {
  double yaw_deg = 0.0;
  /// Maps the canonical frame (front center at the origin, facing -Z) to the slot.
  RigidTransformd transform;
};

struct PlacedLayout {
  std::vector<Placement> placements;
  double diameter_m = 6.0;
  std::vector<IntermediateSlot> intermediate_slots;

  double radius() const { return 0.5 * diameter_m; }
  /// Placement and slot yaws, sorted ascending.
  std::vector<double> occupied_yaws() const;
};

/// Centroid of the nearest kFrontFraction of vertices to the capture camera,
/// dropped onto the floor (y = 0).
Vec3d front_center(const Submesh& sub);

/// Transform taking a submesh's frame to the canonical frame: front center at
/// the origin and front_direction along -Z.
RigidTransformd canonical_frame(const Submesh& sub);

/// Transform placing canonical content at `yaw_deg` on the circle of diameter
/// `d`, facing the center.
RigidTransformd slot_transform(double yaw_deg, double d);

/// Equally spaced yaws starting at 0; every front center on the circle of
/// diameter d facing its center. Throws std::invalid_argument for no input
/// or d <= 0.
PlacedLayout layout_submeshes(const std::vector<Submesh>& subs, double d);

/// Slots bridging the gaps of n equally spaced placements: none for n >= 4,
/// otherwise one per adjacent pair, subdivided until no gap exceeds 120°.
std::vector<IntermediateSlot> plan_intermediate_slots(int n, double d);

/// Largest cyclic gap between sorted yaws (360 for a single yaw).
double max_angular_gap(std::vector<double> yaws);

}  // namespace spaceblender
