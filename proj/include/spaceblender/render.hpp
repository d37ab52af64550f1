#pragma once

#include "spaceblender/core.hpp"
#include "spaceblender/image.hpp"

namespace spaceblender {

/// Output of the software rasterizer. `missing(y,x)` holds exactly where
/// `depth(y,x)` is kMissingDepth.
struct RenderedView {
  ColorImage color;
  DepthImage depth;
  MaskImage missing;
  /// Index of the visible face, -1 where missing.
  Image<std::int32_t> face_ids;
  /// Label of the vertex with the largest barycentric weight; kUnlabeled
  /// where missing or when the mesh has no labels.
  LabelImage labels;

  double missing_fraction() const {
    return missing.size() == 0 ? 0.0 : double(missing.count()) / double(missing.size());
  }
};

/// Near clipping distance in meters.
inline constexpr double kNearPlane = 1e-3;

/// Z-buffered rasterization of `mesh` seen from `cam`. Perspective-correct
/// barycentric interpolation of vertex colors; pixel centers on triangle
/// edges count as covered; equal depths keep the earlier face. No
/// antialiasing, lighting or back-face culling.
RenderedView render_view(const TriangleMeshd& mesh, const CameraView& cam);

}  // namespace spaceblender
