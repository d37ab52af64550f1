#pragma once

#include "spaceblender/layout.hpp"
#include "spaceblender/render.hpp"

#include <vector>

namespace spaceblender {

inline constexpr double kMinPriorHeight = 2.5;
inline constexpr double kCannyLow = 0.1;
inline constexpr double kCannyHigh = 0.2;
inline constexpr double kRelativeDepthPercentile = 0.99;

enum class SurfaceRole : std::uint8_t { kWall, kFloor, kCeiling };

/// ADE20K class id painted for a role.
std::int32_t role_label(SurfaceRole role);

/// Convex room shell: hull edges extruded into walls plus floor and ceiling.
struct PriorMesh {
  TriangleMeshd mesh;
  std::vector<SurfaceRole> face_roles;
  double height_m = kMinPriorHeight;
  /// Counter-clockwise hull in (x, z).
  std::vector<Vec2d> hull;

  /// True when (x, z) lies inside or on the hull within `tol`.
  bool contains_xz(const Vec2d& p, double tol = 1e-6) const;
  /// Signed distance from (x, z) to the hull boundary, positive inside.
  double inside_margin(const Vec2d& p) const;
};

/// Conditioning images rendered from the prior.
struct PriorImageSet {
  /// Relative depth in [0,1] (depth over its 99th percentile, clamped).
  DepthImage depth;
  MaskImage layout_edges;
  ColorImage semantic;
  /// Z-depth of the prior in meters.
  DepthImage metric_depth;
  /// Role label per pixel.
  LabelImage labels;
};

/// Convex hull of (x, z) points, counter-clockwise, without collinear points.
std::vector<Vec2d> convex_hull_xz(const std::vector<Vec2d>& points, double collinear_tol = 1e-6);
std::vector<Vec2d> convex_hull_xz(const Points3d& points, double collinear_tol = 1e-6);

/// Points this close to a prior hull edge count as collinear, meters.
inline constexpr double kHullCollinearTol = 1e-3;
/// Hull edges shorter than this are collapsed when building a prior, meters.
inline constexpr double kMinHullEdge = 0.05;

/// Collapses each edge shorter than `min_edge` onto the intersection of its
/// neighbouring edge lines when that point lies within `min_edge` of both
/// endpoints. The result still encloses the input polygon.
std::vector<Vec2d> collapse_short_edges(std::vector<Vec2d> hull, double min_edge = kMinHullEdge);

/// Shell over a hull polygon; throws PipelineError for a degenerate hull.
PriorMesh build_prior_from_hull(const std::vector<Vec2d>& hull, double height);

/// Shell around already placed meshes; height = max(2.5, tallest vertex).
/// Short hull edges left by pixel sampling are collapsed.
PriorMesh build_prior_from_meshes(const std::vector<const TriangleMeshd*>& placed);

/// Shell around the submeshes placed by `layout` (submesh_id indexes `subs`).
PriorMesh build_geometric_prior(const PlacedLayout& layout, const std::vector<Submesh>& subs);

/// Z-buffer render of the prior with the three conditioning families. Throws
/// PipelineError when the camera is outside the hull.
PriorImageSet render_prior_images(const PriorMesh& prior, const CameraView& cam);

/// Layout edges of a z-depth image: Sobel normals, then Canny on the normal
/// map. The result does not depend on the depth scale.
MaskImage layout_edges_from_depth(const DepthImage& depth, const CameraView& cam);

/// Depth conditioning image: near is bright (1 - relative depth).
ColorImage depth_conditioning_image(const DepthImage& relative_depth);
/// White edges on black.
ColorImage edge_conditioning_image(const MaskImage& edges);

}  // namespace spaceblender
