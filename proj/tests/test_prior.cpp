#include "spaceblender/ade20k.hpp"
#include "spaceblender/layout.hpp"
#include "spaceblender/prior.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <set>

using namespace sbt;

namespace {

// Brute-force hull oracle: a point is a corner when some pair of hull edges
// through it have every other point strictly on the inner side or on the edge.
std::set<std::pair<double, double>> brute_force_corners(const std::vector<Vec2d>& pts) {
  std::set<std::pair<double, double>> corners;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (i == j || pts[i] == pts[j]) continue;
      bool edge = true;
      for (std::size_t k = 0; k < pts.size() && edge; ++k) {
        const Vec2d a = pts[j] - pts[i], b = pts[k] - pts[i];
        const double c = a.x() * b.y() - a.y() * b.x();
        if (c < -1e-12) edge = false;
        // Points beyond the segment on its line make it not a full edge.
        if (std::abs(c) <= 1e-12 && (a.dot(b) < 0 || b.squaredNorm() > a.squaredNorm())) edge = false;
      }
      if (edge) {
        corners.insert({pts[i].x(), pts[i].y()});
        corners.insert({pts[j].x(), pts[j].y()});
      }
    }
  }
  return corners;
}

std::vector<Vec2d> unit_square_points(const Vec2d& c) {
  std::vector<Vec2d> p;
  for (int i = 0; i <= 4; ++i)
    for (int j = 0; j <= 4; ++j) p.push_back(c + Vec2d(-0.5 + 0.25 * i, -0.5 + 0.25 * j));
  return p;
}

}  // namespace

TEST_CASE("convex hull of a single square footprint is the square; prior is a box") {
  const auto hull = convex_hull_xz(unit_square_points({0, 0}));
  REQUIRE(hull.size() == 4);
  const auto prior = build_prior_from_hull(hull, 2.5);
  CHECK(prior.mesh.is_valid());
  CHECK(prior.mesh.face_count() == 4 * 2 + 2 + 2);
  CHECK(prior.face_roles.size() == std::size_t(prior.mesh.face_count()));
  CHECK(prior.mesh.vertices.col(0).minCoeff() == -0.5);
  CHECK(prior.mesh.vertices.col(0).maxCoeff() == 0.5);
  CHECK(prior.mesh.vertices.col(1).maxCoeff() == 2.5);
  CHECK(prior.contains_xz({0, 0}));
  CHECK(prior.inside_margin({0, 0}) == doctest::Approx(0.5));
  CHECK(prior.inside_margin({0.4, 0}) == doctest::Approx(0.1));
  CHECK_FALSE(prior.contains_xz({0.6, 0}));
}

TEST_CASE("hull of two unit squares at (+-2, 0) matches the brute-force oracle") {
  auto pts = unit_square_points({-2, 0});
  const auto right = unit_square_points({2, 0});
  pts.insert(pts.end(), right.begin(), right.end());
  const auto hull = convex_hull_xz(pts);
  REQUIRE(hull.size() == 4);
  std::set<std::pair<double, double>> got;
  for (const auto& p : hull) got.insert({p.x(), p.y()});
  CHECK(got == brute_force_corners(pts));
  // Counter-clockwise in (x, z).
  double area = 0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    area += a.x() * b.y() - b.x() * a.y();
  }
  CHECK(0.5 * area == doctest::Approx(5.0));
}

TEST_CASE("hull agrees with the oracle on random point sets") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vec2d> pts(30);
    for (auto& p : pts) p = Vec2d(u(rng), u(rng));
    const auto hull = convex_hull_xz(pts);
    std::set<std::pair<double, double>> got;
    for (const auto& p : hull) got.insert({p.x(), p.y()});
    CHECK(got == brute_force_corners(pts));
  }
}

TEST_CASE("prior height is the tallest vertex with a 2.5 m floor") {
  auto tall = quad_z(-1, 1, 0, 3.0, -1);
  auto wide = quad_z(-1, 1, 0, 1.0, -1);
  wide.vertices.col(2) << -1, -1, 1, 1;  // give it area in x/z
  tall.vertices.col(2) << -1, -1, 1, 1;
  CHECK(build_prior_from_meshes({&wide, &tall}).height_m == 3.0);
  auto short_one = wide;
  short_one.vertices.col(1).setConstant(2.0);
  CHECK(build_prior_from_meshes({&wide, &short_one}).height_m == 2.5);
  CHECK_THROWS_AS(build_prior_from_meshes({}), PipelineError);
  CHECK_THROWS_AS(build_prior_from_hull({{0, 0}, {1, 0}}, 2.5), PipelineError);
}

TEST_CASE("prior images: frontal wall has constant relative depth and no interior edges") {
  const std::vector<Vec2d> hull{{-10, -3}, {10, -3}, {10, 10}, {-10, 10}};
  const auto prior = build_prior_from_hull(hull, 20.0);
  const auto cam = CameraView::look({0, 10, 0}, 180.0, 0.0, 64, 64);  // faces -Z
  const auto img = render_prior_images(prior, cam);
  CHECK((img.metric_depth - 3.f).abs().maxCoeff() < 1e-5f);
  CHECK((img.depth - 1.f).abs().maxCoeff() < 1e-5f);
  CHECK_FALSE(img.layout_edges.any());
  CHECK((img.labels == ade20k::kWall).all());
  const auto cond = depth_conditioning_image(img.depth);
  CHECK(cond.pixels.abs().maxCoeff() < 1e-5f);
}

TEST_CASE("prior images: semantic colors are the palette entries; edges are scale-free") {
  const std::vector<Vec2d> hull{{-6, -6}, {6, -6}, {6, 6}, {-6, 6}};
  const auto prior = build_prior_from_hull(hull, 2.5);
  const auto cam = CameraView::look({0, 1.5, 0}, 180.0, 0.0, 96, 96);
  const auto img = render_prior_images(prior, cam);
  int roles = 0;
  for (const auto label : {ade20k::kWall, ade20k::kFloor, ade20k::kCeiling}) {
    bool seen = false;
    for (int y = 0; y < 96; ++y)
      for (int x = 0; x < 96; ++x)
        if (img.labels(y, x) == label) {
          seen = true;
          CHECK((img.semantic.at(x, y).transpose() == ade20k::color(label).array()).all());
        }
    roles += seen;
  }
  CHECK(roles == 3);
  CHECK(img.layout_edges.any());
  const DepthImage scaled = img.metric_depth * 3.7f;
  CHECK((layout_edges_from_depth(scaled, cam) == img.layout_edges).all());
  CHECK_THROWS_AS(render_prior_images(prior, CameraView::look({7, 1.5, 0}, 0, 0, 8, 8)), PipelineError);
}

TEST_CASE("geometric prior encloses every placed submesh") {
  const auto cam = default_input_camera(48);
  const auto sub = lift_truth(synthetic::synthetic_scene_oracle("lounge", cam), cam);
  const auto layout = layout_submeshes({sub, sub, sub}, 6.0);
  const auto prior = build_geometric_prior(layout, {sub, sub, sub});
  for (const auto& p : layout.placements) {
    const auto placed = apply_rigid_transform(sub.mesh, p.transform);
    for (Eigen::Index i = 0; i < placed.vertex_count(); ++i)
      REQUIRE(prior.contains_xz({placed.vertices(i, 0), placed.vertices(i, 2)}, kHullCollinearTol));
  }
  CHECK(prior.contains_xz({0, 0}));
  CHECK(prior.height_m >= 2.5);
}
