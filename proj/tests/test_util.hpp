#pragma once

#include "spaceblender/backends.hpp"
#include "spaceblender/core.hpp"
#include "spaceblender/ingest.hpp"
#include "spaceblender/lift3d.hpp"
#include "spaceblender/synthetic.hpp"

#include <random>

namespace sbt {

using namespace spaceblender;

/// Depth backend returning a fixed depth image; honors known pixels.
class FixedDepth : public DepthBackend {
 public:
  explicit FixedDepth(DepthImage depth) : depth_(std::move(depth)) {}
  std::string identity() const override { return "test-fixed-depth"; }
  DepthImage predict(const ColorImage&, const DepthImage* known, const MaskImage* mask) override {
    DepthImage out = depth_;
    if (known && mask) {
      for (Eigen::Index i = 0; i < out.size(); ++i)
        if ((*mask)(i)) out(i) = (*known)(i);
    }
    return out;
  }

 private:
  DepthImage depth_;
};

/// Segmentation backend returning fixed labels.
class FixedLabels : public SegmentationBackend {
 public:
  explicit FixedLabels(LabelImage labels) : labels_(std::move(labels)) {}
  std::string identity() const override { return "test-fixed-labels"; }
  LabelImage segment(const ColorImage&) override { return labels_; }

 private:
  LabelImage labels_;
};

/// Ground-truth render of a scene from the default capture camera, lifted
/// with oracle depth and labels.
inline Submesh lift_truth(const synthetic::SceneRender& r, const CameraView& cam, const LabelImage* labels = nullptr) {
  PreparedImage img{r.color, "truth", std::nullopt};
  DepthImage depth = r.depth;
  for (Eigen::Index i = 0; i < depth.size(); ++i)
    if (is_missing(depth(i))) depth(i) = 50.f;
  FixedDepth d(depth);
  FixedLabels s(labels ? *labels : r.labels);
  return estimate_and_backproject(img, cam, d, s);
}

inline RigidTransformd random_transform(std::mt19937_64& rng, double max_translation = 5.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(-max_translation, max_translation);
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  q.normalize();
  return {q.toRotationMatrix(), Vec3d(u(rng), u(rng), u(rng))};
}

/// Single triangle mesh with optional labels.
inline TriangleMeshd triangle(const Vec3d& a, const Vec3d& b, const Vec3d& c, bool labeled = false) {
  TriangleMeshd m;
  m.vertices.resize(3, 3);
  m.vertices << a.transpose(), b.transpose(), c.transpose();
  m.faces.resize(1, 3);
  m.faces << 0, 1, 2;
  m.colors = VertexColors::Constant(3, 3, 0.5f);
  if (labeled) m.labels = VertexLabels::Zero(3);
  return m;
}

/// Axis-aligned quad in a plane of constant z (two triangles, CCW seen from +Z).
inline TriangleMeshd quad_z(double x0, double x1, double y0, double y1, double z, float gray = 0.5f) {
  TriangleMeshd m;
  m.vertices.resize(4, 3);
  m.vertices << x0, y0, z, x1, y0, z, x1, y1, z, x0, y1, z;
  m.faces.resize(2, 3);
  m.faces << 0, 1, 2, 0, 2, 3;
  m.colors = VertexColors::Constant(4, 3, gray);
  return m;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace sbt
