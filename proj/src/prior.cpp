#include "spaceblender/prior.hpp"

#include "spaceblender/ade20k.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace spaceblender {
namespace {

double cross2(const Vec2d& o, const Vec2d& a, const Vec2d& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// Drops vertices lying within `tol` of the segment joining their neighbours.
std::vector<Vec2d> drop_collinear(std::vector<Vec2d> poly, double tol) {
  bool changed = true;
  while (changed && poly.size() > 3) {
    changed = false;
    for (std::size_t i = 0; i < poly.size() && poly.size() > 3; ++i) {
      const Vec2d& prev = poly[(i + poly.size() - 1) % poly.size()];
      const Vec2d& next = poly[(i + 1) % poly.size()];
      const double base = (next - prev).norm();
      const double dist = base > 0 ? std::abs(cross2(prev, next, poly[i])) / base : 0.0;
      if (dist <= tol) {
        poly.erase(poly.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  return poly;
}

// Sobel derivatives with replicated borders.
void sobel(const Image<double>& img, Image<double>& gx, Image<double>& gy) {
  const Eigen::Index h = img.rows(), w = img.cols();
  gx.resize(h, w);
  gy.resize(h, w);
  auto at = [&](Eigen::Index y, Eigen::Index x) {
    return img(std::clamp<Eigen::Index>(y, 0, h - 1), std::clamp<Eigen::Index>(x, 0, w - 1));
  };
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      gx(y, x) = (at(y - 1, x + 1) + 2 * at(y, x + 1) + at(y + 1, x + 1)) -
                 (at(y - 1, x - 1) + 2 * at(y, x - 1) + at(y + 1, x - 1));
      gy(y, x) = (at(y + 1, x - 1) + 2 * at(y + 1, x) + at(y + 1, x + 1)) -
                 (at(y - 1, x - 1) + 2 * at(y - 1, x) + at(y - 1, x + 1));
    }
  }
}

}  // namespace

std::int32_t role_label(SurfaceRole role) {
  switch (role) {
    case SurfaceRole::kWall: return ade20k::kWall;
    case SurfaceRole::kFloor: return ade20k::kFloor;
    case SurfaceRole::kCeiling: return ade20k::kCeiling;
  }
  return ade20k::kWall;
}

bool PriorMesh::contains_xz(const Vec2d& p, double tol) const { return inside_margin(p) >= -tol; }

double PriorMesh::inside_margin(const Vec2d& p) const {
  if (hull.size() < 3) return -std::numeric_limits<double>::infinity();
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2d& a = hull[i];
    const Vec2d& b = hull[(i + 1) % hull.size()];
    margin = std::min(margin, cross2(a, b, p) / (b - a).norm());
  }
  return margin;
}

std::vector<Vec2d> convex_hull_xz(const std::vector<Vec2d>& input, double collinear_tol) {
  std::vector<Vec2d> pts = input;
  std::sort(pts.begin(), pts.end(), [](const Vec2d& a, const Vec2d& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec2d> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross2(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    const Vec2d& p = pts[i - 1];
    while (k >= t && cross2(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return drop_collinear(std::move(hull), collinear_tol);
}

std::vector<Vec2d> convex_hull_xz(const Points3d& points, double collinear_tol) {
  std::vector<Vec2d> xz(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) xz[std::size_t(i)] = Vec2d(points(i, 0), points(i, 2));
  return convex_hull_xz(xz, collinear_tol);
}

PriorMesh build_prior_from_hull(const std::vector<Vec2d>& hull, double height) {
  if (hull.size() < 3) throw PipelineError("prior", "degenerate hull (fewer than three corners)");
  double area = 0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2d& a = hull[i];
    const Vec2d& b = hull[(i + 1) % hull.size()];
    area += a.x() * b.y() - b.x() * a.y();
  }
  if (!(0.5 * area > 1e-9)) throw PipelineError("prior", "degenerate hull (zero area or clockwise)");
  if (!(height > 0)) throw PipelineError("prior", "non-positive prior height");

  PriorMesh prior;
  prior.hull = hull;
  prior.height_m = height;
  const auto m = static_cast<Eigen::Index>(hull.size());
  const Eigen::Index nv = 4 * m + 2 * m;
  const Eigen::Index nf = 2 * m + 2 * (m - 2);
  TriangleMeshd& mesh = prior.mesh;
  mesh.vertices.resize(nv, 3);
  mesh.colors.resize(nv, 3);
  mesh.labels = VertexLabels(nv);
  mesh.faces.resize(nf, 3);
  prior.face_roles.reserve(static_cast<std::size_t>(nf));

  Eigen::Index v = 0, f = 0;
  auto add_vertex = [&](double x, double y, double z, SurfaceRole role) {
    mesh.vertices.row(v) << x, y, z;
    mesh.colors.row(v) = ade20k::color(role_label(role)).transpose();
    (*mesh.labels)(v) = role_label(role);
    return static_cast<std::int32_t>(v++);
  };
  auto add_face = [&](std::int32_t a, std::int32_t b, std::int32_t c, SurfaceRole role) {
    mesh.faces.row(f++) << a, b, c;
    prior.face_roles.push_back(role);
  };

  for (Eigen::Index i = 0; i < m; ++i) {
    const Vec2d& a = hull[std::size_t(i)];
    const Vec2d& b = hull[std::size_t((i + 1) % m)];
    const auto a0 = add_vertex(a.x(), 0, a.y(), SurfaceRole::kWall);
    const auto b0 = add_vertex(b.x(), 0, b.y(), SurfaceRole::kWall);
    const auto b1 = add_vertex(b.x(), height, b.y(), SurfaceRole::kWall);
    const auto a1 = add_vertex(a.x(), height, a.y(), SurfaceRole::kWall);
    add_face(a0, b0, b1, SurfaceRole::kWall);
    add_face(a0, b1, a1, SurfaceRole::kWall);
  }
  const std::array<std::pair<SurfaceRole, double>, 2> caps{{{SurfaceRole::kFloor, 0.0},
                                                            {SurfaceRole::kCeiling, height}}};
  for (const auto& [role, y] : caps) {
    const auto first = static_cast<std::int32_t>(v);
    for (const auto& p : hull) add_vertex(p.x(), y, p.y(), role);
    for (Eigen::Index i = 1; i + 1 < m; ++i)
      add_face(first, first + static_cast<std::int32_t>(i), first + static_cast<std::int32_t>(i + 1), role);
  }
  return prior;
}

std::vector<Vec2d> collapse_short_edges(std::vector<Vec2d> hull, double min_edge) {
  auto cross2 = [](const Vec2d& a, const Vec2d& b) { return a.x() * b.y() - a.y() * b.x(); };
  for (bool changed = true; changed && hull.size() > 3;) {
    changed = false;
    const std::size_t n = hull.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2d& p = hull[i];
      const Vec2d& q = hull[(i + 1) % n];
      if ((q - p).norm() >= min_edge) continue;
      const Vec2d& before = hull[(i + n - 1) % n];
      const Vec2d& after = hull[(i + 2) % n];
      const Vec2d d1 = p - before, d2 = after - q;
      const double denom = cross2(d1, d2);
      if (std::abs(denom) < 1e-12) continue;
      const Vec2d x = p + d1 * (cross2(q - p, d2) / denom);
      if ((x - p).norm() > min_edge || (x - q).norm() > min_edge) continue;
      hull[i] = x;
      hull.erase(hull.begin() + std::ptrdiff_t((i + 1) % n));
      changed = true;
      break;
    }
  }
  return hull;
}

PriorMesh build_prior_from_meshes(const std::vector<const TriangleMeshd*>& placed) {
  std::vector<Vec2d> xz;
  double top = kMinPriorHeight;
  for (const auto* mesh : placed) {
    if (mesh == nullptr || mesh->empty()) continue;
    // Hull of each mesh first keeps the global pass small.
    const auto part = convex_hull_xz(mesh->vertices, 0.0);
    xz.insert(xz.end(), part.begin(), part.end());
    top = std::max(top, mesh->vertices.col(1).maxCoeff());
  }
  if (xz.empty()) throw PipelineError("prior", "no placed geometry");
  return build_prior_from_hull(collapse_short_edges(convex_hull_xz(xz, kHullCollinearTol)), top);
}

PriorMesh build_geometric_prior(const PlacedLayout& layout, const std::vector<Submesh>& subs) {
  if (layout.placements.empty()) throw PipelineError("prior", "empty layout");
  std::vector<TriangleMeshd> placed;
  placed.reserve(layout.placements.size());
  for (const auto& p : layout.placements) {
    if (p.submesh_id < 0 || std::size_t(p.submesh_id) >= subs.size()) {
      throw std::invalid_argument("build_geometric_prior: placement refers to a missing submesh");
    }
    placed.push_back(apply_rigid_transform(subs[std::size_t(p.submesh_id)].mesh, p.transform));
  }
  std::vector<const TriangleMeshd*> ptrs;
  for (const auto& m : placed) ptrs.push_back(&m);
  return build_prior_from_meshes(ptrs);
}

MaskImage layout_edges_from_depth(const DepthImage& depth, const CameraView& cam) {
  const Eigen::Index h = depth.rows(), w = depth.cols();
  Image<double> z(h, w);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x) z(y, x) = is_missing(depth(y, x)) ? 0.0 : double(depth(y, x));

  Image<double> zx, zy;
  sobel(z, zx, zy);
  const double f = cam.focal_px();
  std::array<Image<double>, 3> normal;
  for (auto& c : normal) c.resize(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      const double d = z(y, x);
      const Vec3d ray((double(x) + 0.5 - cam.cx()) / f, -(double(y) + 0.5 - cam.cy()) / f, -1.0);
      // P = d * ray; Sobel returns 8x the central derivative.
      const Vec3d du = zx(y, x) / 8.0 * ray + Vec3d(d / f, 0, 0);
      const Vec3d dv = zy(y, x) / 8.0 * ray + Vec3d(0, -d / f, 0);
      Vec3d n = du.cross(dv);
      const double len = n.norm();
      n = len > 0 ? Vec3d(n / len) : Vec3d::Zero();
      for (int c = 0; c < 3; ++c) normal[std::size_t(c)](y, x) = n(c);
    }
  }

  // Multi-channel Canny: magnitude over all channels, direction from the
  // strongest channel. A full -1 to 1 step in one channel scores 1.
  Image<double> mag = Image<double>::Zero(h, w);
  Image<double> best = Image<double>::Zero(h, w);
  Image<double> dir_x = Image<double>::Zero(h, w), dir_y = Image<double>::Zero(h, w);
  for (const auto& channel : normal) {
    Image<double> gx, gy;
    sobel(channel, gx, gy);
    const Image<double> sq = gx.square() + gy.square();
    mag += sq;
    for (Eigen::Index i = 0; i < sq.size(); ++i) {
      if (sq(i) > best(i)) {
        best(i) = sq(i);
        dir_x(i) = gx(i);
        dir_y(i) = gy(i);
      }
    }
  }
  mag = mag.sqrt() / 8.0;

  MaskImage strong = MaskImage::Constant(h, w, false);
  MaskImage weak = MaskImage::Constant(h, w, false);
  for (Eigen::Index y = 1; y + 1 < h; ++y) {
    for (Eigen::Index x = 1; x + 1 < w; ++x) {
      const double m = mag(y, x);
      if (m < kCannyLow) continue;
      double angle = rad2deg(std::atan2(dir_y(y, x), dir_x(y, x)));
      if (angle < 0) angle += 180.0;
      int dx, dy;
      if (angle < 22.5 || angle >= 157.5) {
        dx = 1;
        dy = 0;
      } else if (angle < 67.5) {
        dx = 1;
        dy = 1;
      } else if (angle < 112.5) {
        dx = 0;
        dy = 1;
      } else {
        dx = -1;
        dy = 1;
      }
      if (!(m > mag(y - dy, x - dx) && m >= mag(y + dy, x + dx))) continue;
      (m >= kCannyHigh ? strong : weak)(y, x) = true;
    }
  }
  // Hysteresis: weak pixels survive when 8-connected to a strong one.
  MaskImage edges = strong;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> stack;
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x)
      if (strong(y, x)) stack.emplace_back(y, x);
  while (!stack.empty()) {
    const auto [y, x] = stack.back();
    stack.pop_back();
    for (Eigen::Index dy = -1; dy <= 1; ++dy) {
      for (Eigen::Index dx = -1; dx <= 1; ++dx) {
        const Eigen::Index yy = y + dy, xx = x + dx;
        if (yy < 0 || xx < 0 || yy >= h || xx >= w || edges(yy, xx) || !weak(yy, xx)) continue;
        edges(yy, xx) = true;
        stack.emplace_back(yy, xx);
      }
    }
  }
  // Sobel on replicated borders is unreliable in the outer two pixels.
  const Eigen::Index b = std::min<Eigen::Index>(2, std::min(h, w));
  edges.topRows(b) = false;
  edges.bottomRows(b) = false;
  edges.leftCols(b) = false;
  edges.rightCols(b) = false;
  return edges;
}

PriorImageSet render_prior_images(const PriorMesh& prior, const CameraView& cam) {
  const Vec3d pos = cam.position();
  if (!prior.contains_xz(Vec2d(pos.x(), pos.z())) || pos.y() < -1e-6 || pos.y() > prior.height_m + 1e-6) {
    throw PipelineError("prior", "camera outside the prior hull");
  }
  const RenderedView view = render_view(prior.mesh, cam);
  const int w = cam.width_px, h = cam.height_px;

  PriorImageSet out;
  out.metric_depth = view.depth;
  std::vector<float> covered;
  covered.reserve(std::size_t(w) * h);
  for (Eigen::Index i = 0; i < view.depth.size(); ++i)
    if (!is_missing(view.depth(i))) covered.push_back(view.depth(i));
  float reference = 1.f;
  if (!covered.empty()) {
    const auto k = static_cast<std::size_t>(std::floor(kRelativeDepthPercentile * double(covered.size() - 1)));
    std::nth_element(covered.begin(), covered.begin() + static_cast<std::ptrdiff_t>(k), covered.end());
    reference = std::max(covered[k], 1e-6f);
  }
  out.depth.resize(h, w);
  for (Eigen::Index i = 0; i < view.depth.size(); ++i)
    out.depth(i) = is_missing(view.depth(i)) ? 1.f : std::min(view.depth(i) / reference, 1.f);

  out.layout_edges = layout_edges_from_depth(view.depth, cam);

  out.semantic = ColorImage(w, h);
  out.labels = LabelImage::Constant(h, w, kUnlabeled);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::int32_t face = view.face_ids(y, x);
      if (face < 0) continue;
      const std::int32_t label = role_label(prior.face_roles[std::size_t(face)]);
      out.labels(y, x) = label;
      out.semantic.at(x, y) = ade20k::color(label).transpose().array();
    }
  }
  return out;
}

ColorImage depth_conditioning_image(const DepthImage& relative_depth) {
  ColorImage img(static_cast<int>(relative_depth.cols()), static_cast<int>(relative_depth.rows()));
  for (Eigen::Index i = 0; i < relative_depth.size(); ++i)
    img.pixels.row(i).setConstant(1.f - std::clamp(relative_depth(i), 0.f, 1.f));
  return img;
}

ColorImage edge_conditioning_image(const MaskImage& edges) {
  ColorImage img(static_cast<int>(edges.cols()), static_cast<int>(edges.rows()));
  for (Eigen::Index i = 0; i < edges.size(); ++i) img.pixels.row(i).setConstant(edges(i) ? 1.f : 0.f);
  return img;
}

}  // namespace spaceblender
