#include "spaceblender/lift3d.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace spaceblender {
namespace {

bool depth_jump(float a, float b, float c) {
  const float lo = std::min({a, b, c}), hi = std::max({a, b, c});
  return (hi - lo) > kDepthJumpThreshold * lo;
}

double median_of(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
  return m;
}

// Least squares s*p + b = k with s kept positive.
std::pair<double, double> fit_affine(const std::vector<double>& p, const std::vector<double>& k) {
  const double n = double(p.size());
  double sp = 0, sk = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    sp += p[i];
    sk += k[i];
  }
  const double mp = sp / n, mk = sk / n;
  double cov = 0, var = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    cov += (p[i] - mp) * (k[i] - mk);
    var += (p[i] - mp) * (p[i] - mp);
  }
  double s = var > 0 ? cov / var : 1.0;
  if (!(s > 0)) s = var > 0 ? 1e-6 : 1.0;
  return {s, mk - s * mp};
}

}  // namespace

CameraView default_input_camera(int size) {
  CameraView cam;
  cam.pose.translation = Vec3d(0, kEyeHeight, 0);
  cam.width_px = size;
  cam.height_px = size;
  return cam;
}

Vec3d front_direction_of(const CameraView& cam) {
  Vec3d f = -cam.forward();
  f.y() = 0.0;
  if (f.norm() < 1e-9) f = -direction_from_yaw_pitch(cam.view_yaw_deg(), 0.0);
  return f.normalized();
}

Submesh estimate_and_backproject(const PreparedImage& img, const CameraView& cam, DepthBackend& depth,
                                 SegmentationBackend& seg) {
  const int w = img.color.width, h = img.color.height;
  if (w < 2 || h < 2) throw PipelineError("lift3d", "image too small to triangulate");
  if (!img.color.same_size(cam.width_px, cam.height_px)) {
    throw PipelineError("lift3d", "image size differs from camera resolution");
  }
  DepthImage d;
  LabelImage labels;
  try {
    d = depth.predict(img.color);
    labels = seg.segment(img.color);
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError("lift3d", std::string("backend failure: ") + e.what());
  }
  if (!same_size(d, w, h) || !same_size(labels, w, h)) {
    throw PipelineError("lift3d", "backend output size differs from image");
  }
  if (!(d.isFinite() && (d > 0.f)).all()) {
    throw PipelineError("lift3d", "depth backend returned non-positive or non-finite depth");
  }

  Submesh sub;
  sub.capture_camera = cam;
  sub.front_direction = front_direction_of(cam);
  sub.source_id = img.source_id;
  if (img.caption) sub.caption = *img.caption;
  TriangleMeshd empty;
  empty.labels = VertexLabels();
  sub.mesh = fuse_view(empty, cam, img.color, d, MaskImage::Constant(h, w, true), &labels);
  return sub;
}

DepthAlignment align_depth(const DepthImage& predicted, const DepthImage& known, const MaskImage& known_mask) {
  const Eigen::Index h = predicted.rows(), w = predicted.cols();
  if (known.rows() != h || known.cols() != w || known_mask.rows() != h || known_mask.cols() != w) {
    throw std::invalid_argument("align_depth: image sizes differ");
  }
  DepthAlignment out;
  out.depth = predicted;

  std::vector<double> p, k;
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      if (!known_mask(y, x) || !std::isfinite(known(y, x)) || !std::isfinite(predicted(y, x))) continue;
      p.push_back(predicted(y, x));
      k.push_back(known(y, x));
    }
  }
  if (p.size() < std::size_t(kMinAlignmentPixels)) return out;

  // Robust start: median ratio, then median offset.
  std::vector<double> ratios;
  ratios.reserve(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0) ratios.push_back(k[i] / p[i]);
  double s0 = ratios.empty() ? 1.0 : median_of(ratios);
  if (!(s0 > 0)) s0 = 1.0;
  std::vector<double> offsets(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) offsets[i] = k[i] - s0 * p[i];
  const double b0 = median_of(offsets);

  std::vector<double> abs_res(p.size());
  double scale_ref = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    abs_res[i] = std::abs(offsets[i] - b0);
    scale_ref = std::max(scale_ref, std::abs(k[i]));
  }
  const double sigma = 1.4826 * median_of(abs_res);
  const double cut = 3.0 * sigma + 1e-12 * std::max(1.0, scale_ref);

  std::vector<double> pk, kk;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (abs_res[i] <= cut) {
      pk.push_back(p[i]);
      kk.push_back(k[i]);
    }
  }
  if (pk.size() < std::size_t(kMinAlignmentPixels)) {
    pk = p;
    kk = k;
  }
  const auto [s, b] = fit_affine(pk, kk);
  out.scale = s;
  out.offset = b;
  out.aligned = true;
  out.inliers = static_cast<int>(pk.size());
  out.depth = (predicted.cast<double>() * s + b).cast<float>();
  return out;
}

TriangleMeshd fuse_patch(const CameraView& cam, const ColorImage& color, const DepthImage& depth,
                         const MaskImage& inpaint_mask, const RenderedView& existing, const LabelImage* labels) {
  const int w = cam.width_px, h = cam.height_px;
  if (!color.same_size(w, h) || !same_size(depth, w, h) || !same_size(inpaint_mask, w, h) ||
      !same_size(existing.depth, w, h) || (labels && !same_size(*labels, w, h))) {
    throw std::invalid_argument("fuse_view: image sizes differ from camera resolution");
  }

  std::vector<std::int32_t> ids(std::size_t(w) * h, -1);
  std::vector<float> vdepth(std::size_t(w) * h, kMissingDepth);
  auto masked = [&](int x, int y) { return x >= 0 && y >= 0 && x < w && y < h && inpaint_mask(y, x); };

  TriangleMeshd patch;
  std::vector<Vec3d> verts;
  std::vector<Eigen::Vector3f> cols;
  std::vector<std::int32_t> labs;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float d;
      std::int32_t label;
      if (inpaint_mask(y, x)) {
        d = depth(y, x);
        if (!(std::isfinite(d) && d > 0.f)) {
          throw std::invalid_argument("fuse_view: masked pixel without positive depth");
        }
        label = labels ? (*labels)(y, x) : kUnlabeled;
      } else {
        if (existing.missing(y, x)) continue;
        bool border = false;
        for (int dy = -1; dy <= 1 && !border; ++dy)
          for (int dx = -1; dx <= 1 && !border; ++dx) border = (dx || dy) && masked(x + dx, y + dy);
        if (!border) continue;
        d = existing.depth(y, x);
        label = existing.labels.size() ? existing.labels(y, x) : kUnlabeled;
      }
      const std::size_t i = std::size_t(y) * w + x;
      ids[i] = static_cast<std::int32_t>(verts.size());
      vdepth[i] = d;
      verts.push_back(cam.backproject(x, y, d));
      cols.push_back(color.at(x, y).transpose().matrix());
      labs.push_back(label);
    }
  }

  std::vector<std::array<std::int32_t, 3>> faces;
  for (int y = 0; y + 1 < h; ++y) {
    for (int x = 0; x + 1 < w; ++x) {
      if (!(masked(x, y) || masked(x + 1, y) || masked(x, y + 1) || masked(x + 1, y + 1))) continue;
      // Counter-clockwise on screen: top-left, bottom-left, bottom-right, top-right.
      const std::array<std::size_t, 4> px{std::size_t(y) * w + x, std::size_t(y + 1) * w + x,
                                          std::size_t(y + 1) * w + x + 1, std::size_t(y) * w + x + 1};
      int present = 0;
      for (const auto p : px) present += ids[p] >= 0;
      auto emit = [&](std::size_t a, std::size_t b, std::size_t c) {
        if (depth_jump(vdepth[a], vdepth[b], vdepth[c])) return;
        faces.push_back({ids[a], ids[b], ids[c]});
      };
      if (present == 4) {
        emit(px[0], px[1], px[2]);
        emit(px[0], px[2], px[3]);
      } else if (present == 3) {
        std::array<std::size_t, 3> tri{};
        int n = 0;
        for (const auto p : px)
          if (ids[p] >= 0) tri[std::size_t(n++)] = p;
        emit(tri[0], tri[1], tri[2]);
      }
    }
  }

  const auto nv = static_cast<Eigen::Index>(verts.size());
  patch.vertices.resize(nv, 3);
  patch.colors.resize(nv, 3);
  VertexLabels vl(nv);
  for (Eigen::Index i = 0; i < nv; ++i) {
    patch.vertices.row(i) = verts[std::size_t(i)].transpose();
    patch.colors.row(i) = cols[std::size_t(i)].transpose();
    vl(i) = labs[std::size_t(i)];
  }
  if (labels) patch.labels = std::move(vl);
  patch.faces.resize(static_cast<Eigen::Index>(faces.size()), 3);
  for (std::size_t f = 0; f < faces.size(); ++f)
    patch.faces.row(Eigen::Index(f)) << faces[f][0], faces[f][1], faces[f][2];
  return patch;
}

TriangleMeshd fuse_view(const TriangleMeshd& mesh, const CameraView& cam, const ColorImage& color,
                        const DepthImage& depth, const MaskImage& inpaint_mask, const LabelImage* labels,
                        const RenderedView* existing) {
  if (!inpaint_mask.any()) return mesh;
  RenderedView rendered;
  if (existing == nullptr) {
    rendered = render_view(mesh, cam);
    existing = &rendered;
  }
  TriangleMeshd patch = fuse_patch(cam, color, depth, inpaint_mask, *existing, labels);
  if (mesh.has_labels() && !patch.has_labels()) {
    patch.labels = VertexLabels::Constant(patch.vertex_count(), kUnlabeled);
  } else if (!mesh.has_labels()) {
    patch.labels.reset();
  }
  return append_mesh(mesh, patch);
}

}  // namespace spaceblender
