#include "spaceblender/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace spaceblender {
namespace {

// A corner of a triangle after near-plane clipping: camera-space position
// plus its barycentric coordinates in the original face.
struct ClipVertex {
  Vec3d p;
  Vec3d bary;
};

constexpr double kEdgeEpsilon = 1e-9;

class Rasterizer {
 public:
  Rasterizer(const TriangleMeshd& mesh, const CameraView& cam)
      : mesh_(mesh),
        width_(cam.width_px),
        height_(cam.height_px),
        focal_(cam.focal_px()),
        cx_(cam.cx()),
        cy_(cam.cy()) {
    view_.color = ColorImage(width_, height_);
    view_.depth = DepthImage::Constant(height_, width_, kMissingDepth);
    view_.face_ids = Image<std::int32_t>::Constant(height_, width_, -1);
    view_.labels = LabelImage::Constant(height_, width_, kUnlabeled);
    // Camera-space coordinates for all vertices: R^T (v - t), row form.
    if (!mesh.empty()) {
      local_ = (mesh.vertices.rowwise() - cam.pose.translation.transpose()) * cam.pose.rotation;
    }
    bary_.resize(static_cast<std::size_t>(width_) * height_);
  }

  RenderedView run() {
    const Eigen::Index nf = mesh_.face_count();
    const Eigen::Index nv = local_.rows();
    // Screen projection for vertices in front of the near plane.
    screen_.resize(nv, 2);
    in_front_.resize(static_cast<std::size_t>(nv));
    for (Eigen::Index i = 0; i < nv; ++i) {
      const double depth = -local_(i, 2);
      in_front_[static_cast<std::size_t>(i)] = depth > kNearPlane;
      if (depth > kNearPlane) {
        screen_(i, 0) = cx_ + focal_ * local_(i, 0) / depth;
        screen_(i, 1) = cy_ - focal_ * local_(i, 1) / depth;
      }
    }

    for (Eigen::Index f = 0; f < nf; ++f) {
      const std::array<std::int32_t, 3> idx{mesh_.faces(f, 0), mesh_.faces(f, 1), mesh_.faces(f, 2)};
      const int front = int(in_front_[std::size_t(idx[0])]) + int(in_front_[std::size_t(idx[1])]) +
                        int(in_front_[std::size_t(idx[2])]);
      if (front == 0) continue;
      if (front == 3) {
        rasterize_projected(static_cast<std::int32_t>(f), idx);
      } else {
        rasterize_clipped(static_cast<std::int32_t>(f), idx);
      }
    }
    resolve();
    return std::move(view_);
  }

 private:
  void rasterize_projected(std::int32_t face, const std::array<std::int32_t, 3>& idx) {
    const double x0 = screen_(idx[0], 0), y0 = screen_(idx[0], 1);
    const double x1 = screen_(idx[1], 0), y1 = screen_(idx[1], 1);
    const double x2 = screen_(idx[2], 0), y2 = screen_(idx[2], 1);
    // Cheap reject before any setup.
    if (std::max({x0, x1, x2}) < 0.5 - 1e-6 || std::min({x0, x1, x2}) > width_ - 0.5 + 1e-6 ||
        std::max({y0, y1, y2}) < 0.5 - 1e-6 || std::min({y0, y1, y2}) > height_ - 0.5 + 1e-6) {
      return;
    }
    const std::array<Vec2d, 3> s{Vec2d(x0, y0), Vec2d(x1, y1), Vec2d(x2, y2)};
    const std::array<double, 3> inv_depth{-1.0 / local_(idx[0], 2), -1.0 / local_(idx[1], 2),
                                          -1.0 / local_(idx[2], 2)};
    static const std::array<Vec3d, 3> unit{Vec3d::UnitX(), Vec3d::UnitY(), Vec3d::UnitZ()};
    raster_triangle(face, s, inv_depth, unit);
  }

  void rasterize_clipped(std::int32_t face, const std::array<std::int32_t, 3>& idx) {
    std::array<ClipVertex, 3> tri;
    for (int k = 0; k < 3; ++k) {
      tri[k].p = local_.row(idx[k]).transpose();
      tri[k].bary = Vec3d::Unit(k);
    }
    // Sutherland-Hodgman against depth > near (camera-space z < -near).
    std::vector<ClipVertex> poly;
    poly.reserve(4);
    for (int k = 0; k < 3; ++k) {
      const ClipVertex& a = tri[k];
      const ClipVertex& b = tri[(k + 1) % 3];
      const double da = -a.p.z() - kNearPlane;
      const double db = -b.p.z() - kNearPlane;
      if (da > 0) poly.push_back(a);
      if ((da > 0) != (db > 0)) {
        const double t = da / (da - db);
        poly.push_back({a.p + t * (b.p - a.p), a.bary + t * (b.bary - a.bary)});
      }
    }
    if (poly.size() < 3) return;
    std::vector<Vec2d> s(poly.size());
    std::vector<double> w(poly.size());
    for (std::size_t k = 0; k < poly.size(); ++k) {
      const double depth = std::max(-poly[k].p.z(), kNearPlane);
      s[k] = Vec2d(cx_ + focal_ * poly[k].p.x() / depth, cy_ - focal_ * poly[k].p.y() / depth);
      w[k] = 1.0 / depth;
    }
    for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
      raster_triangle(face, {s[0], s[k], s[k + 1]}, {w[0], w[k], w[k + 1]},
                      {poly[0].bary, poly[k].bary, poly[k + 1].bary});
    }
  }

  void raster_triangle(std::int32_t face, const std::array<Vec2d, 3>& s,
                       const std::array<double, 3>& inv_depth, const std::array<Vec3d, 3>& bary) {
    const double area = (s[1].x() - s[0].x()) * (s[2].y() - s[0].y()) -
                        (s[2].x() - s[0].x()) * (s[1].y() - s[0].y());
    if (std::abs(area) < 1e-14) return;
    const double min_x = std::min({s[0].x(), s[1].x(), s[2].x()});
    const double max_x = std::max({s[0].x(), s[1].x(), s[2].x()});
    const double min_y = std::min({s[0].y(), s[1].y(), s[2].y()});
    const double max_y = std::max({s[0].y(), s[1].y(), s[2].y()});
    // Pixel x covers center x + 0.5; include centers within epsilon of the box.
    const int x_begin = std::max(0, static_cast<int>(std::ceil(min_x - 0.5 - 1e-7)));
    const int x_end = std::min(width_ - 1, static_cast<int>(std::floor(max_x - 0.5 + 1e-7)));
    const int y_begin = std::max(0, static_cast<int>(std::ceil(min_y - 0.5 - 1e-7)));
    const int y_end = std::min(height_ - 1, static_cast<int>(std::floor(max_y - 0.5 + 1e-7)));
    if (x_begin > x_end || y_begin > y_end) return;

    const double inv_area = 1.0 / area;
    for (int y = y_begin; y <= y_end; ++y) {
      const double py = y + 0.5;
      for (int x = x_begin; x <= x_end; ++x) {
        const double px = x + 0.5;
        const double b0 = ((s[1].x() - px) * (s[2].y() - py) - (s[2].x() - px) * (s[1].y() - py)) * inv_area;
        const double b1 = ((s[2].x() - px) * (s[0].y() - py) - (s[0].x() - px) * (s[2].y() - py)) * inv_area;
        const double b2 = 1.0 - b0 - b1;
        if (b0 < -kEdgeEpsilon || b1 < -kEdgeEpsilon || b2 < -kEdgeEpsilon) continue;
        const double iw = b0 * inv_depth[0] + b1 * inv_depth[1] + b2 * inv_depth[2];
        if (iw <= 0.0) continue;
        const double depth = 1.0 / iw;
        const auto zd = static_cast<float>(depth);
        if (!(zd < view_.depth(y, x))) continue;
        view_.depth(y, x) = zd;
        view_.face_ids(y, x) = face;
        const Vec3d pb = (b0 * inv_depth[0] * bary[0] + b1 * inv_depth[1] * bary[1] +
                          b2 * inv_depth[2] * bary[2]) * depth;
        bary_[static_cast<std::size_t>(y) * width_ + x] = pb;
      }
    }
  }

  // Shades each covered pixel once, from the surviving face.
  void resolve() {
    const bool labeled = mesh_.has_labels();
    for (int y = 0; y < height_; ++y) {
      for (int x = 0; x < width_; ++x) {
        const std::int32_t face = view_.face_ids(y, x);
        if (face < 0) continue;
        const Vec3d& b = bary_[static_cast<std::size_t>(y) * width_ + x];
        const auto& f = mesh_.faces;
        Eigen::Vector3f c = Eigen::Vector3f::Zero();
        for (int k = 0; k < 3; ++k) {
          c += static_cast<float>(b[k]) * mesh_.colors.row(f(face, k)).transpose();
        }
        view_.color.at(x, y) = c.transpose().array();
        if (labeled) {
          Eigen::Index best = 0;
          b.maxCoeff(&best);
          view_.labels(y, x) = (*mesh_.labels)(f(face, static_cast<int>(best)));
        }
      }
    }
    view_.missing = view_.face_ids < 0;
  }

  const TriangleMeshd& mesh_;
  int width_, height_;
  double focal_, cx_, cy_;
  Points3d local_;
  Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor> screen_;
  std::vector<char> in_front_;
  std::vector<Vec3d> bary_;
  RenderedView view_;
};

}  // namespace

RenderedView render_view(const TriangleMeshd& mesh, const CameraView& cam) {
  return Rasterizer(mesh, cam).run();
}

}  // namespace spaceblender
