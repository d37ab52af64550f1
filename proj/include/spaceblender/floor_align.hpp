#pragma once

#include "spaceblender/ade20k.hpp"
#include "spaceblender/backends.hpp"
#include "spaceblender/lift3d.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace spaceblender {

inline constexpr double kFloorBand = 0.3;
inline constexpr int kRansacIterations = 1000;
inline constexpr double kRansacInlierDistance = 0.02;
inline constexpr double kMaxFloorTiltDeg = 45.0;
inline constexpr double kMinFloorExtent = 0.5;
inline constexpr int kFloorGenerationSteps = 5;
inline constexpr int kFloorGenerationAttempts = 10;

/// Floor-like vertices of a submesh and their indices into its mesh.
struct FloorPoints {
  Points3d points;
  std::vector<Eigen::Index> vertex_indices;
};

/// Plane n . x = offset with n pointing up, fitted to floor points.
struct FloorPlane {
  Vec3d normal = Vec3d::UnitY();
  double offset = 0.0;
  /// Indices into the fitted point set.
  std::vector<Eigen::Index> inlier_indices;
  Vec3d inlier_centroid = Vec3d::Zero();
  double extent_x = 0.0;
  double extent_z = 0.0;
};

/// Floor-labeled vertices within kFloorBand of their median height.
FloorPoints extract_floor_vertices(const Submesh& sub,
                                   const std::vector<std::int32_t>& floor_labels = ade20k::default_floor_labels());

/// True when a plane with this normal and inlier extent passes the three
/// floor heuristics (tilt, upward normal, X/Z extent).
bool floor_plane_admissible(const Vec3d& normal, double extent_x, double extent_z);

/// RANSAC floor fit. Hypothesis normals are oriented towards `viewpoint`
/// (the observer) or, without one, upwards; only admissible hypotheses are
/// kept and the best is refined by least squares on its inliers.
std::optional<FloorPlane> fit_floor_plane(const Points3d& points, std::uint64_t rng_seed,
                                          const std::optional<Vec3d>& viewpoint = std::nullopt);

/// Rotates the plane normal onto +Y (minimal rotation) and translates so the
/// inlier centroid sits at y = 0 and the smallest z over all vertices is 0.
/// `floor_points` must be the set the plane was fitted to.
std::pair<Submesh, RigidTransformd> align_submesh_to_floor(const Submesh& sub, const FloorPlane& plane,
                                                           const Points3d& floor_points);

/// Camera of floor-generation step `k` (0-based) relative to the capture camera.
CameraView floor_generation_camera(const CameraView& capture, int k);

/// Pitch (degrees, relative), backward and upward offsets (meters) of step k.
struct FloorStepParams {
  double pitch_deg;
  double backward_m;
  double upward_m;
};
FloorStepParams floor_generation_params(int k);

/// Grows floor geometry along the floor-generation trajectory until a floor
/// plane is found, then aligns. After kFloorGenerationAttempts failures the
/// input is returned with aligned = floor_found = false.
Submesh generate_floor(const Submesh& sub, const BackendSet& backends, std::uint64_t rng_seed,
                       int* attempts_out = nullptr,
                       const std::vector<std::int32_t>& floor_labels = ade20k::default_floor_labels());

/// extract + fit + align, falling back to generate_floor when no floor is seen
/// or no admissible plane exists.
Submesh align_or_generate_floor(const Submesh& sub, const BackendSet& backends, std::uint64_t rng_seed,
                                const std::vector<std::int32_t>& floor_labels = ade20k::default_floor_labels());

}  // namespace spaceblender
