#include "spaceblender/ade20k.hpp"
#include "spaceblender/floor_align.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <chrono>

using namespace sbt;

namespace {

Submesh labeled_points(const Points3d& pts, const std::vector<std::int32_t>& labels) {
  Submesh s;
  s.mesh.vertices = pts;
  s.mesh.colors = VertexColors::Constant(pts.rows(), 3, 0.5f);
  s.mesh.faces.resize(0, 3);
  s.mesh.labels = VertexLabels(pts.rows());
  for (Eigen::Index i = 0; i < pts.rows(); ++i) (*s.mesh.labels)(i) = labels[std::size_t(i)];
  return s;
}

Points3d grid_plane(const Vec3d& center, const Vec3d& u, const Vec3d& v, double half, int n) {
  Points3d p(n * n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double a = -half + 2 * half * i / (n - 1), b = -half + 2 * half * j / (n - 1);
      p.row(i * n + j) = (center + a * u + b * v).transpose();
    }
  return p;
}

// Paints masked pixels with the floor color where the pixel ray hits y = 0 in
// front of `cam`, wall color elsewhere (or wall everywhere when walls_only).
class FloorPlanePainter : public InpaintBackend {
 public:
  FloorPlanePainter(CameraView cam, bool walls_only) : cam_(cam), walls_only_(walls_only) {}
  std::string identity() const override { return "test-floor-painter"; }
  ColorImage inpaint(const InpaintRequest& r) override {
    ColorImage out = r.color;
    for (int y = 0; y < out.height; ++y)
      for (int x = 0; x < out.width; ++x)
        if (r.mask(y, x)) {
          const bool floor = !walls_only_ && (cam_.backproject(x, y, 1.0) - cam_.position()).y() < -1e-3;
          out.at(x, y) = ade20k::color(floor ? ade20k::kFloor : ade20k::kWall).transpose().array();
        }
    return out;
  }

 private:
  CameraView cam_;
  bool walls_only_;
};

// Depth of the y = 0 plane along each pixel ray of `cam` (20 m above the horizon).
class FloorPlaneDepth : public DepthBackend {
 public:
  explicit FloorPlaneDepth(CameraView cam) : cam_(cam) {}
  std::string identity() const override { return "test-floor-depth"; }
  DepthImage predict(const ColorImage& c, const DepthImage* known, const MaskImage* mask) override {
    DepthImage out(c.height, c.width);
    for (int y = 0; y < c.height; ++y)
      for (int x = 0; x < c.width; ++x) {
        const Vec3d p1 = cam_.backproject(x, y, 1.0);
        const double dy = p1.y() - cam_.position().y();
        out(y, x) = dy < -1e-3 ? float(-cam_.position().y() / dy) : 20.f;
        if (known && mask && (*mask)(y, x)) out(y, x) = (*known)(y, x);
      }
    return out;
  }

 private:
  CameraView cam_;
};

Submesh wall_submesh(int size) {
  const auto cam = default_input_camera(size);
  synthetic::Scene scene;
  scene.add_quad({0, 1.5, -3}, Vec3d::UnitX(), Vec3d::UnitY(), 10, 10, ade20k::kWall);
  auto sub = lift_truth(synthetic::render_scene(scene, cam), cam);
  sub.caption = "room space with bare walls";
  return sub;
}

}  // namespace

TEST_CASE("extract_floor_vertices: uniform floor, mislabeled cluster, no floor") {
  const auto floor = grid_plane({0, 0.4, -2}, Vec3d::UnitX(), Vec3d::UnitZ(), 1.0, 20);
  const auto all = extract_floor_vertices(labeled_points(floor, std::vector<std::int32_t>(400, ade20k::kFloor)));
  CHECK(all.points.rows() == 400);

  Points3d mixed(500, 3);
  mixed.topRows(400) = grid_plane({0, 0, -2}, Vec3d::UnitX(), Vec3d::UnitZ(), 1.0, 20);
  mixed.bottomRows(100) = grid_plane({0, 1.0, -2}, Vec3d::UnitX(), Vec3d::UnitZ(), 0.3, 10);
  std::vector<std::int32_t> labels(500, ade20k::kFloor);
  for (int i = 450; i < 500; ++i) labels[std::size_t(i)] = ade20k::kRug;
  const auto fp = extract_floor_vertices(labeled_points(mixed, labels));
  CHECK(fp.points.rows() == 400);
  CHECK(fp.points.col(1).cwiseAbs().maxCoeff() == 0.0);
  for (const auto i : fp.vertex_indices) CHECK(i < 400);

  const auto none = extract_floor_vertices(labeled_points(floor, std::vector<std::int32_t>(400, ade20k::kWall)));
  CHECK(none.points.rows() == 0);
}

TEST_CASE("fit_floor_plane: heuristic rejections") {
  const double t = deg2rad(50.0);
  const Vec3d tilted_u(std::cos(t), std::sin(t), 0);
  CHECK_FALSE(fit_floor_plane(grid_plane({0, 0, -2}, tilted_u, Vec3d::UnitZ(), 1.0, 30), 1).has_value());
  CHECK_FALSE(fit_floor_plane(grid_plane({0, 0, -2}, Vec3d::UnitX(), Vec3d::UnitZ(), 0.15, 30), 1).has_value());
  // Seen from below, the oriented normal points down.
  const auto level = grid_plane({0, 0, -2}, Vec3d::UnitX(), Vec3d::UnitZ(), 1.0, 30);
  CHECK_FALSE(fit_floor_plane(level, 1, Vec3d(0, -1.5, 0)).has_value());
  CHECK(fit_floor_plane(level, 1, Vec3d(0, 1.5, 0)).has_value());
  CHECK_FALSE(fit_floor_plane(Points3d(2, 3), 1).has_value());

  CHECK(floor_plane_admissible(Vec3d::UnitY(), 0.5, 0.5));
  CHECK_FALSE(floor_plane_admissible(Vec3d::UnitY(), 0.49, 2.0));
  CHECK_FALSE(floor_plane_admissible(-Vec3d::UnitY(), 2.0, 2.0));
  CHECK(floor_plane_admissible(direction_from_yaw_pitch(0, 45.0 + 1e-9), 2.0, 2.0));
  CHECK_FALSE(floor_plane_admissible(direction_from_yaw_pitch(0, 44.9), 2.0, 2.0));
}

TEST_CASE("fit_floor_plane: 2 m plane at y=0.5 with 20% outliers") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0), box(-1.5, 1.5);
  std::normal_distribution<double> noise(0.0, 0.003);
  const int n = 5000;
  Points3d pts(n, 3);
  std::vector<bool> inlier(n);
  for (int i = 0; i < n; ++i) {
    inlier[std::size_t(i)] = i % 5 != 0;
    if (inlier[std::size_t(i)]) {
      pts.row(i) << u(rng), 0.5 + noise(rng), -2 + u(rng);
    } else {
      pts.row(i) << box(rng), 0.5 + box(rng), -2 + box(rng);
    }
  }
  const auto plane = fit_floor_plane(pts, 3);
  REQUIRE(plane.has_value());
  const double angle = rad2deg(std::acos(std::clamp(plane->normal.dot(Vec3d::UnitY()), -1.0, 1.0)));
  CHECK(angle < 0.5);
  CHECK(std::abs(plane->offset - 0.5) <= 0.005);

  // Oracle: least squares on the true inliers.
  Points3d in(n - n / 5, 3);
  Eigen::Index k = 0;
  for (int i = 0; i < n; ++i)
    if (inlier[std::size_t(i)]) in.row(k++) = pts.row(i);
  const Vec3d c = in.colwise().mean().transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(in.rowwise() - c.transpose(), Eigen::ComputeThinV);
  Vec3d normal = svd.matrixV().col(2);
  if (normal.y() < 0) normal = -normal;
  CHECK(rad2deg(std::acos(std::min(1.0, normal.dot(plane->normal)))) < 0.2);
  CHECK(std::abs(normal.dot(c) - plane->offset) < 0.002);
}

TEST_CASE("align_submesh_to_floor: identity and pure translation") {
  Points3d floor = grid_plane({0, 0, 1}, Vec3d::UnitX(), Vec3d::UnitZ(), 1.0, 11);
  auto sub = labeled_points(floor, std::vector<std::int32_t>(121, ade20k::kFloor));
  const auto plane = fit_floor_plane(floor, 1);
  REQUIRE(plane.has_value());
  const auto [same, t0] = align_submesh_to_floor(sub, *plane, floor);
  CHECK(t0.rotation.isApprox(Mat3d::Identity(), 1e-12));
  CHECK(t0.translation.norm() < 1e-12);

  floor.col(1).array() += 0.5;
  sub.mesh.vertices = floor;
  const auto plane2 = fit_floor_plane(floor, 1);
  REQUIRE(plane2.has_value());
  const auto [moved, t1] = align_submesh_to_floor(sub, *plane2, floor);
  CHECK(t1.rotation.isApprox(Mat3d::Identity(), 1e-12));
  CHECK((t1.translation - Vec3d(0, -0.5, -0.0)).norm() < 1e-12);
  CHECK(moved.mesh.vertices.col(1).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(moved.mesh.vertices.col(2).minCoeff() == doctest::Approx(0.0));
  CHECK(moved.aligned);
}

TEST_CASE("30 degree tilted room aligns its floor to y = 0") {
  const auto cam = default_input_camera(256);
  const auto scene = synthetic::render_scene(synthetic::make_tilted_floor_scene(30.0, 0.4), cam);
  const auto sub = lift_truth(scene, cam);
  const auto fp = extract_floor_vertices(sub);
  REQUIRE(fp.points.rows() > 1000);
  const auto plane = fit_floor_plane(fp.points, 5, cam.position());
  REQUIRE(plane.has_value());
  const auto [aligned, t] = align_submesh_to_floor(sub, *plane, fp.points);
  long good = 0;
  for (const auto i : plane->inlier_indices)
    good += std::abs(aligned.mesh.vertices(fp.vertex_indices[std::size_t(i)], 1)) <= 0.01;
  CHECK(double(good) >= 0.99 * double(plane->inlier_indices.size()));
  // The capture camera follows the mesh.
  CHECK((aligned.capture_camera.position() - t(cam.position())).norm() < 1e-12);
}

TEST_CASE("floor generation step parameters") {
  for (int k = 0; k < kFloorGenerationSteps; ++k) {
    const auto p = floor_generation_params(k);
    CHECK(p.pitch_deg == doctest::Approx(-5.0 - 6.25 * k));
    CHECK(p.backward_m == doctest::Approx(1.0 + 0.125 * k));
    CHECK(p.upward_m == doctest::Approx(0.3 + 0.175 * k));
  }
  CHECK(floor_generation_params(4).pitch_deg == doctest::Approx(-30.0));
  CHECK(floor_generation_params(4).backward_m == doctest::Approx(1.5));
  CHECK(floor_generation_params(4).upward_m == doctest::Approx(1.0));
  CHECK_THROWS(floor_generation_params(5));
  const auto cam = floor_generation_camera(default_input_camera(), 2);
  CHECK((cam.position() - Vec3d(0, 1.5 + 0.65, 1.25)).norm() < 1e-12);
  CHECK(cam.view_pitch_deg() == doctest::Approx(-17.5));
}

TEST_CASE("generate_floor: a painter that adds a y=0 plane succeeds on the first attempt") {
  const auto sub = wall_submesh(128);
  auto backends = synthetic::make_backends();
  const auto cam0 = floor_generation_camera(sub.capture_camera, 0);
  backends.inpaint = std::make_shared<FloorPlanePainter>(cam0, false);
  backends.depth = std::make_shared<FloorPlaneDepth>(cam0);
  int attempts = 0;
  const auto out = generate_floor(sub, backends, 3, &attempts);
  CHECK(attempts == 1);
  CHECK(out.floor_found);
  CHECK(out.aligned);
  const auto fp = extract_floor_vertices(out);
  REQUIRE(fp.points.rows() > 0);
  long good = 0;
  for (Eigen::Index i = 0; i < fp.points.rows(); ++i) good += std::abs(fp.points(i, 1)) <= 0.02;
  CHECK(double(good) >= 0.99 * double(fp.points.rows()));
}

TEST_CASE("generate_floor: a painter that only paints walls gives up after ten attempts") {
  const auto sub = wall_submesh(64);
  auto backends = synthetic::make_backends();
  const auto cam0 = floor_generation_camera(sub.capture_camera, 0);
  backends.inpaint = std::make_shared<FloorPlanePainter>(cam0, true);
  backends.depth = std::make_shared<FloorPlaneDepth>(cam0);
  int attempts = 0;
  const auto out = generate_floor(sub, backends, 3, &attempts);
  CHECK(attempts == kFloorGenerationAttempts);
  CHECK_FALSE(out.aligned);
  CHECK_FALSE(out.floor_found);
  CHECK((out.mesh.vertices.array() == sub.mesh.vertices.array()).all());
}

TEST_CASE("align_or_generate_floor uses the visible floor directly") {
  const auto cam = default_input_camera(128);
  const auto sub = lift_truth(synthetic::synthetic_scene_oracle("office", cam), cam);
  const auto out = align_or_generate_floor(sub, synthetic::make_backends(), 1);
  CHECK(out.aligned);
  const auto fp = extract_floor_vertices(out);
  CHECK(fp.points.col(1).cwiseAbs().maxCoeff() < 0.01);
  CHECK(out.mesh.vertices.col(2).minCoeff() == doctest::Approx(0.0).epsilon(1e-9));
}
