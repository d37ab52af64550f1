#include "spaceblender/layout.hpp"

#include <algorithm>

namespace spaceblender {

std::vector<double> PlacedLayout::occupied_yaws() const {
  std::vector<double> yaws;
  for (const auto& p : placements) yaws.push_back(wrap_degrees(p.yaw_deg));
  for (const auto& s : intermediate_slots) yaws.push_back(wrap_degrees(s.yaw_deg));
  std::sort(yaws.begin(), yaws.end());
  return yaws;
}

Vec3d front_center(const Submesh& sub) {
  const Eigen::Index n = sub.mesh.vertex_count();
  if (n == 0) throw std::invalid_argument("front_center: empty submesh");
  const Eigen::VectorXd dist =
      (sub.mesh.vertices.rowwise() - sub.capture_camera.position().transpose()).rowwise().squaredNorm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[std::size_t(i)] = i;
  const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(kFrontFraction * double(n)));
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep - 1), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return dist(a) < dist(b) || (dist(a) == dist(b) && a < b); });
  Vec3d c = Vec3d::Zero();
  for (std::size_t k = 0; k < keep; ++k) c += sub.mesh.vertices.row(order[k]).transpose();
  c /= double(keep);
  c.y() = 0.0;
  return c;
}

RigidTransformd canonical_frame(const Submesh& sub) {
  const Vec3d c = front_center(sub);
  Vec3d f = sub.front_direction;
  f.y() = 0.0;
  const double yaw = f.norm() > 1e-12 ? yaw_of(f) : 0.0;
  const RigidTransformd rot = RigidTransformd::yaw(180.0 - yaw);
  return rot * RigidTransformd::from_translation(-c);
}

RigidTransformd slot_transform(double yaw_deg, double d) {
  return RigidTransformd::yaw(yaw_deg, 0.5 * d * direction_from_yaw_pitch(yaw_deg, 0.0));
}

PlacedLayout layout_submeshes(const std::vector<Submesh>& subs, double d) {
  if (subs.empty()) throw std::invalid_argument("layout_submeshes: no submeshes");
  if (!(d > 0.0)) throw std::invalid_argument("layout_submeshes: diameter must be positive");
  PlacedLayout layout;
  layout.diameter_m = d;
  const int n = static_cast<int>(subs.size());
  for (int i = 0; i < n; ++i) {
    const double yaw = 360.0 * i / n;
    Placement p;
    p.submesh_id = i;
    p.yaw_deg = yaw;
    p.transform = slot_transform(yaw, d) * canonical_frame(subs[std::size_t(i)]);
    p.aligned = subs[std::size_t(i)].aligned;
    layout.placements.push_back(p);
  }
  layout.intermediate_slots = plan_intermediate_slots(n, d);
  return layout;
}

double max_angular_gap(std::vector<double> yaws) {
  if (yaws.empty()) return 360.0;
  for (auto& y : yaws) y = wrap_degrees(y);
  std::sort(yaws.begin(), yaws.end());
  double gap = 360.0 - yaws.back() + yaws.front();
  for (std::size_t i = 1; i < yaws.size(); ++i) gap = std::max(gap, yaws[i] - yaws[i - 1]);
  return gap;
}

std::vector<IntermediateSlot> plan_intermediate_slots(int n, double d) {
  std::vector<IntermediateSlot> slots;
  if (n <= 0 || n >= kIntermediateThreshold) return slots;
  std::vector<double> occupied;
  for (int i = 0; i < n; ++i) occupied.push_back(360.0 * i / n);

  auto midpoints = [](const std::vector<double>& yaws, bool only_wide) {
    std::vector<double> mids;
    for (std::size_t i = 0; i < yaws.size(); ++i) {
      const double a = yaws[i];
      const double gap = i + 1 < yaws.size() ? yaws[i + 1] - a : 360.0 - a + yaws.front();
      if (!only_wide || gap > kMaxOccupiedGapDeg + 1e-9) mids.push_back(wrap_degrees(a + 0.5 * gap));
    }
    return mids;
  };

  std::vector<double> new_yaws = midpoints(occupied, false);
  std::vector<double> all = occupied;
  all.insert(all.end(), new_yaws.begin(), new_yaws.end());
  std::sort(all.begin(), all.end());
  while (max_angular_gap(all) > kMaxOccupiedGapDeg + 1e-9) {
    const auto more = midpoints(all, true);
    new_yaws.insert(new_yaws.end(), more.begin(), more.end());
    all.insert(all.end(), more.begin(), more.end());
    std::sort(all.begin(), all.end());
  }
  std::sort(new_yaws.begin(), new_yaws.end());
  for (const double yaw : new_yaws) slots.push_back({yaw, slot_transform(yaw, d)});
  return slots;
}

}  // namespace spaceblender
