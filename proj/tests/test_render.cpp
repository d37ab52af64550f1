#include "spaceblender/ade20k.hpp"
#include "spaceblender/render.hpp"
#include "test_util.hpp"

#include <doctest.h>

using namespace sbt;

TEST_CASE("empty mesh renders missing everywhere") {
  const auto r = render_view(TriangleMeshd{}, default_input_camera(16));
  CHECK(r.missing.all());
  CHECK(r.missing_fraction() == 1.0);
  CHECK((r.depth == kMissingDepth).all());
  CHECK((r.face_ids == -1).all());
}

TEST_CASE("frontal quad at 2 m covers its projection at depth 2") {
  const auto cam = default_input_camera(64);
  const auto r = render_view(quad_z(-0.5, 0.5, 1.0, 2.0, -2.0, 0.4f), cam);
  // Analytic projection of the quad edges: u = cx + f*x/2, v = cy - f*(y-1.5)/2.
  const double f = cam.focal_px();
  const double u0 = 32 - f * 0.25, u1 = 32 + f * 0.25, v0 = 32 - f * 0.25, v1 = 32 + f * 0.25;
  int covered = 0;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      const double u = x + 0.5, v = y + 0.5;
      const bool inside = u > u0 + 1e-6 && u < u1 - 1e-6 && v > v0 + 1e-6 && v < v1 - 1e-6;
      const bool outside = u < u0 - 1e-6 || u > u1 + 1e-6 || v < v0 - 1e-6 || v > v1 + 1e-6;
      if (inside) {
        REQUIRE_FALSE(r.missing(y, x));
        CHECK(std::abs(r.depth(y, x) - 2.0) <= 1e-6);
        CHECK(std::abs(r.color.at(x, y)(0) - 0.4f) < 1e-6f);
        ++covered;
      }
      if (outside) CHECK(r.missing(y, x));
      CHECK(r.missing(y, x) == is_missing(r.depth(y, x)));
    }
  }
  CHECK(covered > 100);
}

TEST_CASE("perspective-correct depth on an oblique floor") {
  const auto cam = CameraView::look({0, 1.5, 0}, 0.0, -40.0, 64, 64);
  TriangleMeshd floor;
  floor.vertices.resize(4, 3);
  floor.vertices << -20, 0, 20, 20, 0, 20, 20, 0, -20, -20, 0, -20;
  floor.faces.resize(2, 3);
  floor.faces << 0, 1, 2, 0, 2, 3;
  floor.colors = VertexColors::Constant(4, 3, 0.5f);
  const auto r = render_view(floor, cam);
  double worst = 0.0;
  int hits = 0;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      // Oracle: ray-plane intersection for the pixel center.
      const Vec3d dir = cam.backproject(x, y, 1.0) - cam.position();
      if (dir.y() >= -1e-9) {
        CHECK(r.missing(y, x));
        continue;
      }
      const double t = -1.5 / dir.y();
      const Vec3d hit = cam.position() + t * dir;
      if (std::abs(hit.x()) > 19 || std::abs(hit.z()) > 19) continue;
      REQUIRE_FALSE(r.missing(y, x));
      worst = std::max(worst, std::abs(r.depth(y, x) - t) / t);
      ++hits;
    }
  }
  CHECK(hits > 1000);
  CHECK(worst < 1e-5);
}

TEST_CASE("nearer surface wins and labels follow the visible face") {
  auto far = quad_z(-1, 1, 0.5, 2.5, -4.0, 0.2f);
  far.labels = VertexLabels::Constant(4, ade20k::kWall);
  auto near = quad_z(-0.2, 0.2, 1.3, 1.7, -2.0, 0.8f);
  near.labels = VertexLabels::Constant(4, ade20k::kCabinet);
  const auto cam = default_input_camera(64);
  for (const auto& m : {append_mesh(far, near), append_mesh(near, far)}) {
    const auto r = render_view(m, cam);
    CHECK(r.labels(32, 32) == ade20k::kCabinet);
    CHECK(r.depth(32, 32) == doctest::Approx(2.0));
    CHECK(r.labels(32, 20) == ade20k::kWall);
    CHECK(r.depth(32, 20) == doctest::Approx(4.0));
  }
}

TEST_CASE("geometry behind the camera is clipped") {
  const auto cam = default_input_camera(32);
  const auto r = render_view(quad_z(-1, 1, 0.5, 2.5, 3.0), cam);
  CHECK(r.missing.all());
  // A triangle crossing the near plane only shows its front part.
  const auto tri = triangle({-1, 1.5, -2}, {1, 1.5, -2}, {0, 1.5, 2});
  const auto r2 = render_view(tri, cam);
  for (Eigen::Index i = 0; i < r2.depth.size(); ++i)
    if (!r2.missing(i)) CHECK(r2.depth(i) > kNearPlane);
}

TEST_CASE("lifted submesh re-rendered from its camera reproduces the image") {
  const auto cam = default_input_camera(128);
  for (const char* id : {"box_room", "office", "corner_room"}) {
    const auto scene = synthetic::synthetic_scene_oracle(id, cam);
    const auto sub = lift_truth(scene, cam);
    const auto r = render_view(sub.mesh, cam);
    std::vector<bool> used(std::size_t(sub.mesh.vertex_count()), false);
    for (Eigen::Index f = 0; f < sub.mesh.face_count(); ++f)
      for (int k = 0; k < 3; ++k) used[std::size_t(sub.mesh.faces(f, k))] = true;
    float worst = 0.f;
    for (int y = 0; y < 128; ++y) {
      for (int x = 0; x < 128; ++x) {
        if (!used[std::size_t(y) * 128 + std::size_t(x)]) continue;
        REQUIRE_FALSE(r.missing(y, x));
        worst = std::max(worst, (r.color.at(x, y) - scene.color.at(x, y)).abs().maxCoeff());
      }
    }
    CHECK_MESSAGE(worst <= 1.f / 255.f, id);
  }
}
