#include "test_util.hpp"

#include <doctest.h>

using namespace sbt;

TEST_CASE("apply_rigid_transform: identity keeps vertices bitwise") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 3);
  TriangleMeshd m;
  m.vertices.resize(50, 3);
  for (Eigen::Index i = 0; i < m.vertices.size(); ++i) m.vertices.data()[i] = u(rng);
  m.colors = VertexColors::Constant(50, 3, 0.2f);
  const auto out = apply_rigid_transform(m, RigidTransformd::identity());
  CHECK((out.vertices.array() == m.vertices.array()).all());
}

TEST_CASE("apply_rigid_transform: 180 degree yaw maps +X to -X") {
  auto m = triangle({1, 0, 0}, {0, 1, 0}, {0, 0, 1});
  const auto out = apply_rigid_transform(m, RigidTransformd::yaw(180.0));
  CHECK((out.vertices.row(0) - Eigen::RowVector3d(-1, 0, 0)).norm() < 1e-12);
}

TEST_CASE("apply_rigid_transform: transform then inverse round-trips and preserves distances") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-4, 4);
  TriangleMeshd m;
  m.vertices.resize(200, 3);
  for (Eigen::Index i = 0; i < m.vertices.size(); ++i) m.vertices.data()[i] = u(rng);
  m.colors = VertexColors::Constant(200, 3, 0.2f);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = random_transform(rng);
    CHECK(t.is_valid());
    const auto moved = apply_rigid_transform(m, t);
    const auto back = apply_rigid_transform(moved, t.inverse());
    CHECK((back.vertices - m.vertices).cwiseAbs().maxCoeff() < 1e-9);
    for (int k = 0; k < 50; ++k) {
      const auto a = std::size_t(rng() % 200), b = std::size_t(rng() % 200);
      const double d0 = (m.vertices.row(Eigen::Index(a)) - m.vertices.row(Eigen::Index(b))).norm();
      const double d1 = (moved.vertices.row(Eigen::Index(a)) - moved.vertices.row(Eigen::Index(b))).norm();
      CHECK(std::abs(d0 - d1) <= 1e-9 * std::max(1.0, d0));
    }
  }
}

TEST_CASE("RigidTransform composition matches sequential application") {
  std::mt19937_64 rng(3);
  const auto a = random_transform(rng), b = random_transform(rng);
  const Vec3d p(0.3, -1.2, 2.5);
  CHECK(((a * b)(p) - a(b(p))).norm() < 1e-12);
  CHECK(((a * a.inverse())(p) - p).norm() < 1e-12);
}

TEST_CASE("append_mesh: counts, offsets and label rules") {
  const auto a = triangle({0, 0, 0}, {1, 0, 0}, {0, 1, 0});
  const auto b = triangle({0, 0, 1}, {1, 0, 1}, {0, 1, 1});
  const auto ab = append_mesh(a, b);
  CHECK(ab.vertex_count() == 6);
  CHECK(ab.face_count() == 2);
  CHECK(ab.faces(1, 0) == 3);
  CHECK(ab.faces(1, 1) == 4);
  CHECK(ab.faces(1, 2) == 5);
  CHECK(ab.is_valid());

  const auto same = append_mesh(a, TriangleMeshd{});
  CHECK((same.vertices.array() == a.vertices.array()).all());
  CHECK(same.face_count() == a.face_count());

  const auto labeled = triangle({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, true);
  CHECK_THROWS_AS(append_mesh(a, labeled), std::invalid_argument);
  CHECK_THROWS_AS(append_mesh(labeled, a), std::invalid_argument);

  TriangleMeshd inplace = a;
  append_mesh_inplace(inplace, b);
  CHECK((inplace.vertices.array() == ab.vertices.array()).all());
  CHECK((inplace.faces.array() == ab.faces.array()).all());
}

TEST_CASE("TriangleMesh validation catches broken invariants") {
  auto m = triangle({0, 0, 0}, {1, 0, 0}, {0, 1, 0});
  CHECK(m.is_valid());
  auto bad_index = m;
  bad_index.faces(0, 2) = 3;
  CHECK_FALSE(bad_index.is_valid());
  auto degenerate = m;
  degenerate.faces(0, 2) = 0;
  CHECK_FALSE(degenerate.is_valid());
  auto colors = m;
  colors.colors.conservativeResize(2, 3);
  CHECK_FALSE(colors.is_valid());
}

TEST_CASE("CameraView: look, backprojection and intrinsics") {
  const auto cam = CameraView::look({1, 1.5, -2}, 30.0, -10.0);
  CHECK(cam.is_valid());
  CHECK(std::abs(cam.view_yaw_deg() - 30.0) < 1e-9);
  CHECK(std::abs(cam.view_pitch_deg() + 10.0) < 1e-9);
  // The image center ray runs along the forward direction.
  const Vec3d p = cam.backproject(255.5, 255.5, 2.0);
  CHECK((p - (cam.position() + 2.0 * cam.forward())).norm() < 1e-9);
  // Focal length from the vertical field of view.
  const double f = 0.5 * 512 / std::tan(deg2rad(27.5));
  CHECK(std::abs(cam.focal_px() - f) < 1e-9);
  CameraView bad;
  bad.fov_vertical_deg = 180.0;
  CHECK_FALSE(bad.is_valid());
}

TEST_CASE("angle helpers wrap and measure circularly") {
  CHECK(wrap_degrees(-10.0) == doctest::Approx(350.0));
  CHECK(wrap_degrees(720.0) == doctest::Approx(0.0));
  CHECK(circular_distance_deg(350.0, 10.0) == doctest::Approx(20.0));
  CHECK(circular_delta_deg(350.0, 10.0) == doctest::Approx(20.0));
  CHECK(circular_delta_deg(10.0, 350.0) == doctest::Approx(-20.0));
  CHECK(yaw_of(direction_from_yaw_pitch(123.0, 20.0)) == doctest::Approx(123.0));
}
