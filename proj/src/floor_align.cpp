#include "spaceblender/floor_align.hpp"

#include "spaceblender/prompts.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <random>

namespace spaceblender {
namespace {

struct Extent {
  double x = 0.0;
  double z = 0.0;
  Vec3d centroid = Vec3d::Zero();
};

Extent inlier_extent(const Points3d& points, const std::vector<Eigen::Index>& idx) {
  Extent e;
  if (idx.empty()) return e;
  Vec3d lo = Vec3d::Constant(std::numeric_limits<double>::infinity());
  Vec3d hi = -lo;
  for (const auto i : idx) {
    const Vec3d p = points.row(i).transpose();
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
    e.centroid += p;
  }
  e.centroid /= double(idx.size());
  e.x = hi.x() - lo.x();
  e.z = hi.z() - lo.z();
  return e;
}

std::vector<Eigen::Index> inliers_of(const Points3d& points, const Vec3d& n, double offset) {
  const Eigen::VectorXd dist = ((points * n).array() - offset).abs();
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < dist.size(); ++i)
    if (dist(i) <= kRansacInlierDistance) idx.push_back(i);
  return idx;
}

Vec3d orient(Vec3d n, const Vec3d& on_plane, const std::optional<Vec3d>& viewpoint) {
  if (viewpoint) {
    if (n.dot(*viewpoint - on_plane) < 0) n = -n;
  } else if (n.y() < 0) {
    n = -n;
  }
  return n;
}

}  // namespace

FloorPoints extract_floor_vertices(const Submesh& sub, const std::vector<std::int32_t>& floor_labels) {
  if (!sub.mesh.has_labels()) throw std::invalid_argument("extract_floor_vertices: mesh has no labels");
  const VertexLabels& labels = *sub.mesh.labels;
  std::vector<Eigen::Index> candidates;
  std::vector<double> ys;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (std::find(floor_labels.begin(), floor_labels.end(), labels(i)) == floor_labels.end()) continue;
    candidates.push_back(i);
    ys.push_back(sub.mesh.vertices(i, 1));
  }
  FloorPoints out;
  if (candidates.empty()) {
    out.points.resize(0, 3);
    return out;
  }
  auto mid = ys.begin() + static_cast<std::ptrdiff_t>(ys.size() / 2);
  std::nth_element(ys.begin(), mid, ys.end());
  double median = *mid;
  if (ys.size() % 2 == 0) median = 0.5 * (median + *std::max_element(ys.begin(), mid));

  for (const auto i : candidates)
    if (std::abs(sub.mesh.vertices(i, 1) - median) <= kFloorBand) out.vertex_indices.push_back(i);
  out.points.resize(static_cast<Eigen::Index>(out.vertex_indices.size()), 3);
  for (std::size_t k = 0; k < out.vertex_indices.size(); ++k)
    out.points.row(Eigen::Index(k)) = sub.mesh.vertices.row(out.vertex_indices[k]);
  return out;
}

bool floor_plane_admissible(const Vec3d& normal, double extent_x, double extent_z) {
  const Vec3d n = normal.normalized();
  if (!(n.y() > 0.0)) return false;
  const double tilt = rad2deg(std::acos(std::clamp(n.y(), -1.0, 1.0)));
  return tilt <= kMaxFloorTiltDeg && extent_x >= kMinFloorExtent && extent_z >= kMinFloorExtent;
}

std::optional<FloorPlane> fit_floor_plane(const Points3d& points, std::uint64_t rng_seed,
                                          const std::optional<Vec3d>& viewpoint) {
  const Eigen::Index n = points.rows();
  if (n < 3) return std::nullopt;
  std::mt19937_64 rng(rng_seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  const double cos_max_tilt = std::cos(deg2rad(kMaxFloorTiltDeg));

  std::optional<FloorPlane> best;
  std::size_t best_count = 0;
  for (int it = 0; it < kRansacIterations; ++it) {
    const Eigen::Index a = pick(rng), b = pick(rng), c = pick(rng);
    if (a == b || b == c || a == c) continue;
    const Vec3d pa = points.row(a).transpose();
    Vec3d normal = (points.row(b).transpose() - pa).cross(points.row(c).transpose() - pa);
    if (normal.norm() < 1e-12) continue;
    normal = orient(normal.normalized(), pa, viewpoint);
    // Tilt and direction first; they need no inlier pass.
    if (!(normal.y() > 0.0) || normal.y() < cos_max_tilt - 1e-15) continue;
    const double offset = normal.dot(pa);
    const auto count = static_cast<std::size_t>((((points * normal).array() - offset).abs() <= kRansacInlierDistance).count());
    if (count <= best_count) continue;
    auto idx = inliers_of(points, normal, offset);
    const Extent e = inlier_extent(points, idx);
    if (!floor_plane_admissible(normal, e.x, e.z)) continue;
    best_count = idx.size();
    best = FloorPlane{normal, offset, std::move(idx), e.centroid, e.x, e.z};
  }
  if (!best) return std::nullopt;

  // Least-squares refinement on the inliers.
  Points3d in(static_cast<Eigen::Index>(best->inlier_indices.size()), 3);
  for (std::size_t k = 0; k < best->inlier_indices.size(); ++k) in.row(Eigen::Index(k)) = points.row(best->inlier_indices[k]);
  const Vec3d centroid = in.colwise().mean().transpose();
  const Points3d centered = in.rowwise() - centroid.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  Vec3d refined = svd.matrixV().col(2);
  if (refined.dot(best->normal) < 0) refined = -refined;
  refined.normalize();
  const double refined_offset = refined.dot(centroid);
  auto idx = inliers_of(points, refined, refined_offset);
  const Extent e = inlier_extent(points, idx);
  const bool same_side = !viewpoint || refined.dot(*viewpoint - centroid) > 0;
  if (idx.size() >= 3 && same_side && floor_plane_admissible(refined, e.x, e.z)) {
    return FloorPlane{refined, refined_offset, std::move(idx), e.centroid, e.x, e.z};
  }
  return best;
}

std::pair<Submesh, RigidTransformd> align_submesh_to_floor(const Submesh& sub, const FloorPlane& plane,
                                                           const Points3d& floor_points) {
  const Mat3d r = Eigen::Quaterniond::FromTwoVectors(plane.normal.normalized(), Vec3d::UnitY()).toRotationMatrix();
  Vec3d centroid = plane.inlier_centroid;
  if (!plane.inlier_indices.empty() && floor_points.rows() > 0) {
    centroid.setZero();
    for (const auto i : plane.inlier_indices) centroid += floor_points.row(i).transpose();
    centroid /= double(plane.inlier_indices.size());
  }
  RigidTransformd t = RigidTransformd::from_rotation(r);
  const double ty = -(r * centroid).y();
  double min_z = 0.0;
  if (!sub.mesh.empty()) min_z = (sub.mesh.vertices * r.transpose()).col(2).minCoeff();
  t.translation = Vec3d(0.0, ty, -min_z);

  Submesh out = sub;
  out.mesh = apply_rigid_transform(sub.mesh, t);
  out.capture_camera.pose = t * sub.capture_camera.pose;
  out.front_direction = front_direction_of(out.capture_camera);
  out.aligned = true;
  out.floor_found = true;
  return {std::move(out), t};
}

FloorStepParams floor_generation_params(int k) {
  if (k < 0 || k >= kFloorGenerationSteps) throw std::out_of_range("floor generation step out of range");
  return {-5.0 + k * (-25.0 / 4.0), 1.0 + k * (0.5 / 4.0), 0.3 + k * (0.7 / 4.0)};
}

CameraView floor_generation_camera(const CameraView& capture, int k) {
  const FloorStepParams p = floor_generation_params(k);
  const double yaw = capture.view_yaw_deg();
  const Vec3d back = -direction_from_yaw_pitch(yaw, 0.0);
  const Vec3d pos = capture.position() + p.backward_m * back + p.upward_m * Vec3d::UnitY();
  return CameraView::look(pos, yaw, capture.view_pitch_deg() + p.pitch_deg, capture.width_px, capture.height_px,
                          capture.fov_vertical_deg);
}

Submesh generate_floor(const Submesh& sub, const BackendSet& backends, std::uint64_t rng_seed, int* attempts_out,
                       const std::vector<std::int32_t>& floor_labels) {
  if (!backends.complete()) throw PipelineError("floor_align", "backend set incomplete");
  Submesh work = sub;
  if (!work.mesh.has_labels()) work.mesh.labels = VertexLabels::Constant(work.mesh.vertex_count(), kUnlabeled);

  std::string prompt;
  try {
    std::string caption = sub.caption;
    if (caption.empty()) caption = caption_image(render_view(work.mesh, work.capture_camera).color, *backends.vlm);
    prompt = infer_floor_prompt(caption, *backends.llm);
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError("floor_align", std::string("floor prompt failed: ") + e.what());
  }

  const Vec3d viewpoint = sub.capture_camera.position();
  for (int attempt = 0; attempt < kFloorGenerationAttempts; ++attempt) {
    if (attempts_out) *attempts_out = attempt + 1;
    const CameraView cam = floor_generation_camera(sub.capture_camera, attempt % kFloorGenerationSteps);
    const RenderedView view = render_view(work.mesh, cam);
    if (view.missing.any()) {
      try {
        InpaintRequest request;
        request.color = view.color;
        request.mask = view.missing;
        request.prompt = prompt;
        request.seed = rng_seed + std::uint64_t(attempt);
        const ColorImage painted = backends.inpaint->inpaint(request);
        const LabelImage labels = backends.seg->segment(painted);
        const MaskImage known = !view.missing;
        const DepthImage predicted = backends.depth->predict(painted, &view.depth, &known);
        const DepthAlignment aligned = align_depth(predicted, view.depth, known);
        DepthImage depth = view.depth;
        for (int y = 0; y < cam.height_px; ++y)
          for (int x = 0; x < cam.width_px; ++x)
            if (view.missing(y, x)) depth(y, x) = std::max(aligned.depth(y, x), float(kNearPlane * 10));
        work.mesh = fuse_view(work.mesh, cam, painted, depth, view.missing, &labels, &view);
      } catch (const PipelineError&) {
        throw;
      } catch (const std::exception& e) {
        throw PipelineError("floor_align", std::string("floor generation backend failure: ") + e.what(), attempt);
      }
    }
    const FloorPoints fp = extract_floor_vertices(work, floor_labels);
    if (fp.points.rows() < 3) continue;
    const auto plane = fit_floor_plane(fp.points, rng_seed + 7919u * std::uint64_t(attempt + 1), viewpoint);
    if (plane) return align_submesh_to_floor(work, *plane, fp.points).first;
  }
  Submesh failed = sub;
  failed.aligned = false;
  failed.floor_found = false;
  return failed;
}

Submesh align_or_generate_floor(const Submesh& sub, const BackendSet& backends, std::uint64_t rng_seed,
                                const std::vector<std::int32_t>& floor_labels) {
  const FloorPoints fp = extract_floor_vertices(sub, floor_labels);
  if (fp.points.rows() >= 3) {
    const auto plane = fit_floor_plane(fp.points, rng_seed, sub.capture_camera.position());
    if (plane) return align_submesh_to_floor(sub, *plane, fp.points).first;
  }
  return generate_floor(sub, backends, rng_seed, nullptr, floor_labels);
}

}  // namespace spaceblender
