#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

namespace spaceblender {

// World frame: right-handed, +Y up, floor at Y = 0. Cameras look down -Z in
// their local frame with +X right and +Y up.

/// Eye height of the conceptual observer, meters.
inline constexpr double kEyeHeight = 1.5;

template <typename Scalar> using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar> using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar> using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Points3 = Eigen::Matrix<Scalar, Eigen::Dynamic, 3, Eigen::RowMajor>;

using Vec2d = Vec2<double>;
using Vec3d = Vec3<double>;
using Mat3d = Mat3<double>;
using Points3d = Points3<double>;

using Faces = Eigen::Matrix<std::int32_t, Eigen::Dynamic, 3, Eigen::RowMajor>;
using VertexColors = Eigen::Matrix<float, Eigen::Dynamic, 3, Eigen::RowMajor>;
using VertexLabels = Eigen::Matrix<std::int32_t, Eigen::Dynamic, 1>;

constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Wraps an angle in degrees into [0, 360).
inline double wrap_degrees(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w < 0.0) w += 360.0;
  if (w >= 360.0) w -= 360.0;
  return w;
}

/// Smallest absolute difference between two angles in degrees, in [0, 180].
inline double circular_distance_deg(double a, double b) {
  const double d = wrap_degrees(a - b);
  return d > 180.0 ? 360.0 - d : d;
}

/// Signed shortest rotation from `from` to `to` in degrees, in (-180, 180].
inline double circular_delta_deg(double from, double to) {
  double d = wrap_degrees(to - from);
  if (d > 180.0) d -= 360.0;
  return d;
}

/// Error raised by a pipeline stage; carries the stage name and, for Stage-2
/// iterations, the index of the failing step.
class PipelineError : public std::runtime_error {
 public:
  PipelineError(std::string stage, const std::string& what, int step_index = -1)
      : std::runtime_error("[" + stage + "] " + what),
        stage_(std::move(stage)),
        step_index_(step_index) {}

  const std::string& stage() const { return stage_; }
  int step_index() const { return step_index_; }

 private:
  std::string stage_;
  int step_index_;
};

/// Proper rigid motion x -> R x + t.
template <typename Scalar>
struct RigidTransform {
  Mat3<Scalar> rotation = Mat3<Scalar>::Identity();
  Vec3<Scalar> translation = Vec3<Scalar>::Zero();

  static RigidTransform identity() { return {}; }

  static RigidTransform from_rotation(const Mat3<Scalar>& r) {
    return {r, Vec3<Scalar>::Zero()};
  }

  static RigidTransform from_translation(const Vec3<Scalar>& t) {
    return {Mat3<Scalar>::Identity(), t};
  }

  /// Rotation by `yaw_deg` about +Y (maps +Z towards +X for positive yaw).
  static RigidTransform yaw(Scalar yaw_deg, const Vec3<Scalar>& t = Vec3<Scalar>::Zero()) {
    const Scalar a = static_cast<Scalar>(deg2rad(static_cast<double>(yaw_deg)));
    return {Eigen::AngleAxis<Scalar>(a, Vec3<Scalar>::UnitY()).toRotationMatrix(), t};
  }

  Vec3<Scalar> operator()(const Vec3<Scalar>& p) const { return rotation * p + translation; }

  /// Composition: (a * b)(x) == a(b(x)).
  RigidTransform operator*(const RigidTransform& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }

  RigidTransform inverse() const {
    const Mat3<Scalar> rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  bool is_valid(Scalar tol = Scalar(1e-9)) const {
    const Mat3<Scalar> gram = rotation.transpose() * rotation;
    return (gram - Mat3<Scalar>::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - Scalar(1)) <= tol && translation.allFinite();
  }

  template <typename Other>
  RigidTransform<Other> cast() const {
    return {rotation.template cast<Other>(), translation.template cast<Other>()};
  }
};

using RigidTransformd = RigidTransform<double>;

/// Triangle mesh with per-vertex RGB color in [0,1] and optional ADE20K label.
template <typename Scalar>
struct TriangleMesh {
  Points3<Scalar> vertices;
  Faces faces;
  VertexColors colors;
  std::optional<VertexLabels> labels;

  Eigen::Index vertex_count() const { return vertices.rows(); }
  Eigen::Index face_count() const { return faces.rows(); }
  bool empty() const { return vertices.rows() == 0; }
  bool has_labels() const { return labels.has_value(); }

  /// Returns an empty string when every invariant holds, otherwise a reason.
  std::string validation_error() const {
    const Eigen::Index n = vertices.rows();
    if (colors.rows() != n) return "vertex color count differs from vertex count";
    if (labels && labels->size() != n) return "vertex label count differs from vertex count";
    for (Eigen::Index f = 0; f < faces.rows(); ++f) {
      const auto a = faces(f, 0), b = faces(f, 1), c = faces(f, 2);
      if (a < 0 || b < 0 || c < 0 || a >= n || b >= n || c >= n) return "face index out of range";
      if (a == b || b == c || a == c) return "degenerate face";
    }
    return {};
  }

  bool is_valid() const { return validation_error().empty(); }
};

using TriangleMeshd = TriangleMesh<double>;

/// Applies `t` to every vertex. Faces, colors and labels are carried over.
template <typename Scalar>
TriangleMesh<Scalar> apply_rigid_transform(const TriangleMesh<Scalar>& mesh,
                                           const RigidTransform<Scalar>& t) {
  TriangleMesh<Scalar> out = mesh;
  if (mesh.vertices.rows() > 0) {
    out.vertices = (mesh.vertices * t.rotation.transpose()).rowwise() + t.translation.transpose();
  }
  return out;
}

/// Concatenates `src` after `dst`, offsetting the appended face indices.
/// Throws std::invalid_argument when exactly one side carries labels, unless
/// the side without labels is empty.
template <typename Scalar>
TriangleMesh<Scalar> append_mesh(const TriangleMesh<Scalar>& dst, const TriangleMesh<Scalar>& src) {
  if (src.empty()) return dst;
  if (dst.empty() && dst.face_count() == 0) return src;
  if (dst.has_labels() != src.has_labels()) {
    throw std::invalid_argument("append_mesh: label presence mismatch");
  }
  const Eigen::Index nv = dst.vertex_count();
  TriangleMesh<Scalar> out;
  out.vertices.resize(nv + src.vertex_count(), 3);
  out.vertices << dst.vertices, src.vertices;
  out.colors.resize(nv + src.vertex_count(), 3);
  out.colors << dst.colors, src.colors;
  out.faces.resize(dst.face_count() + src.face_count(), 3);
  out.faces.topRows(dst.face_count()) = dst.faces;
  out.faces.bottomRows(src.face_count()) = src.faces.array() + static_cast<std::int32_t>(nv);
  if (dst.has_labels()) {
    out.labels = VertexLabels(nv + src.vertex_count());
    *out.labels << *dst.labels, *src.labels;
  }
  return out;
}

/// In-place variant used by the iterative fusion loop.
template <typename Scalar>
void append_mesh_inplace(TriangleMesh<Scalar>& dst, const TriangleMesh<Scalar>& src) {
  if (src.empty()) return;
  if (dst.empty() && dst.face_count() == 0) {
    dst = src;
    return;
  }
  if (dst.has_labels() != src.has_labels()) {
    throw std::invalid_argument("append_mesh: label presence mismatch");
  }
  const Eigen::Index nv = dst.vertex_count();
  const Eigen::Index nf = dst.face_count();
  dst.vertices.conservativeResize(nv + src.vertex_count(), 3);
  dst.vertices.bottomRows(src.vertex_count()) = src.vertices;
  dst.colors.conservativeResize(nv + src.vertex_count(), 3);
  dst.colors.bottomRows(src.vertex_count()) = src.colors;
  dst.faces.conservativeResize(nf + src.face_count(), 3);
  dst.faces.bottomRows(src.face_count()) = src.faces.array() + static_cast<std::int32_t>(nv);
  if (dst.has_labels()) {
    dst.labels->conservativeResize(nv + src.vertex_count());
    dst.labels->tail(src.vertex_count()) = *src.labels;
  }
}

/// Unit viewing direction for a yaw/pitch pair in degrees. Yaw is measured
/// from +Z towards +X seen from above; pitch is positive upwards.
inline Vec3d direction_from_yaw_pitch(double yaw_deg, double pitch_deg) {
  const double y = deg2rad(yaw_deg), p = deg2rad(pitch_deg);
  return {std::cos(p) * std::sin(y), std::sin(p), std::cos(p) * std::cos(y)};
}

/// Yaw (degrees, [0,360)) of the horizontal component of `dir`.
inline double yaw_of(const Vec3d& dir) {
  return wrap_degrees(rad2deg(std::atan2(dir.x(), dir.z())));
}

/// Pinhole camera; `pose` maps camera coordinates to world coordinates.
struct CameraView {
  RigidTransformd pose;
  double fov_vertical_deg = 55.0;
  int width_px = 512;
  int height_px = 512;

  /// Camera at `position` looking along yaw/pitch with the world +Y as up.
  static CameraView look(const Vec3d& position, double yaw_deg, double pitch_deg,
                         int width = 512, int height = 512, double fov_deg = 55.0) {
    const Vec3d forward = direction_from_yaw_pitch(yaw_deg, pitch_deg);
    Vec3d right = forward.cross(Vec3d::UnitY());
    if (right.norm() < 1e-12) {
      // Looking straight up or down: keep the yaw-defined right vector.
      right = direction_from_yaw_pitch(yaw_deg, 0.0).cross(Vec3d::UnitY());
    }
    right.normalize();
    const Vec3d up = right.cross(forward).normalized();
    CameraView cam;
    cam.pose.rotation.col(0) = right;
    cam.pose.rotation.col(1) = up;
    cam.pose.rotation.col(2) = -forward;
    cam.pose.translation = position;
    cam.fov_vertical_deg = fov_deg;
    cam.width_px = width;
    cam.height_px = height;
    return cam;
  }

  double focal_px() const {
    return 0.5 * height_px / std::tan(0.5 * deg2rad(fov_vertical_deg));
  }
  double cx() const { return 0.5 * width_px; }
  double cy() const { return 0.5 * height_px; }

  Vec3d position() const { return pose.translation; }
  Vec3d forward() const { return -pose.rotation.col(2); }
  double view_yaw_deg() const { return yaw_of(forward()); }
  double view_pitch_deg() const { return rad2deg(std::asin(std::clamp(forward().y(), -1.0, 1.0))); }

  /// World point for pixel center (u + 0.5, v + 0.5) at z-depth `depth`.
  Vec3d backproject(double u, double v, double depth) const {
    const double f = focal_px();
    const Vec3d local((u + 0.5 - cx()) / f * depth, -(v + 0.5 - cy()) / f * depth, -depth);
    return pose(local);
  }

  bool is_valid() const {
    return fov_vertical_deg > 0.0 && fov_vertical_deg < 180.0 && width_px > 0 && height_px > 0 &&
           pose.is_valid(1e-9);
  }
};

}  // namespace spaceblender
