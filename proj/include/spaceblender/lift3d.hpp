#pragma once

#include "spaceblender/backends.hpp"
#include "spaceblender/core.hpp"
#include "spaceblender/ingest.hpp"
#include "spaceblender/render.hpp"

namespace spaceblender {

/// Relative depth jump above which a face is treated as a discontinuity.
inline constexpr double kDepthJumpThreshold = 0.10;
/// Minimum number of known pixels for depth alignment.
inline constexpr int kMinAlignmentPixels = 16;

/// Mesh lifted from one image, in the frame of its capture camera.
struct Submesh {
  TriangleMeshd mesh;
  CameraView capture_camera;
  bool aligned = false;
  bool floor_found = false;
  /// Unit direction the captured front surface faces (towards the capture
  /// camera), horizontal in the submesh's frame.
  Vec3d front_direction = Vec3d::UnitZ();
  std::string source_id;
  std::string caption;
};

/// Camera assumed for input photographs: eye height above the origin, looking down -Z.
CameraView default_input_camera(int size = kPreparedSize);

/// Horizontal unit vector opposite to the camera's forward direction.
Vec3d front_direction_of(const CameraView& cam);

/// Predicts depth, backprojects one vertex per pixel and triangulates the
/// grid, dropping faces across depth discontinuities. Labels come from `seg`.
Submesh estimate_and_backproject(const PreparedImage& img, const CameraView& cam, DepthBackend& depth,
                                 SegmentationBackend& seg);

struct DepthAlignment {
  DepthImage depth;
  double scale = 1.0;
  double offset = 0.0;
  /// False when fewer than kMinAlignmentPixels known pixels were available.
  bool aligned = false;
  int inliers = 0;
};

/// Affine fit s * predicted + b to `known` on `known_mask` with s > 0: a
/// median-based start, one trim of residuals beyond 3 robust sigmas, then
/// least squares on the survivors.
DepthAlignment align_depth(const DepthImage& predicted, const DepthImage& known, const MaskImage& known_mask);

/// New geometry for the masked pixels of one view. Masked pixels become
/// vertices at `depth`; unmasked pixels next to the mask that show existing
/// geometry become vertices snapped to `existing.depth`. Faces are kept when
/// they touch the mask and pass the discontinuity filter. Labels are attached
/// when `labels` is given (boundary vertices take the rendered label).
TriangleMeshd fuse_patch(const CameraView& cam, const ColorImage& color, const DepthImage& depth,
                         const MaskImage& inpaint_mask, const RenderedView& existing,
                         const LabelImage* labels = nullptr);

/// `mesh` plus fuse_patch of the view; an empty mask returns `mesh` unchanged.
/// `existing` may be passed when the render of `mesh` from `cam` is at hand.
TriangleMeshd fuse_view(const TriangleMeshd& mesh, const CameraView& cam, const ColorImage& color,
                        const DepthImage& depth, const MaskImage& inpaint_mask,
                        const LabelImage* labels = nullptr, const RenderedView* existing = nullptr);

}  // namespace spaceblender
