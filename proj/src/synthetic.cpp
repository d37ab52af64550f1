#include "spaceblender/synthetic.hpp"

#include "spaceblender/ade20k.hpp"
#include "spaceblender/prompts.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>

namespace spaceblender::synthetic {
namespace {

constexpr std::array<std::int32_t, 8> kVocabulary{ade20k::kWall,    ade20k::kFloor, ade20k::kCeiling,
                                                  ade20k::kCabinet, ade20k::kPerson, ade20k::kPlant,
                                                  ade20k::kSofa,    ade20k::kRug};

constexpr std::array<std::string_view, 9> kSceneIds{"box_room",  "two_plane", "tilted_floor",
                                                    "furnished_person", "corner_room", "office",
                                                    "lounge", "studio", "bedroom"};

struct UnitPalette {
  std::array<Eigen::Vector3f, kVocabulary.size()> directions;
  UnitPalette() {
    for (std::size_t i = 0; i < kVocabulary.size(); ++i) {
      directions[i] = ade20k::color(kVocabulary[i]).normalized();
    }
  }
};

const UnitPalette& unit_palette() {
  static const UnitPalette p;
  return p;
}

// Straight back wall, floor and ceiling seen from the default camera.
void add_straight_room(Scene& s, double wall_distance, double height) {
  const double half_width = 30.0;
  const double back = -wall_distance, front = 6.0;
  const double mid_z = 0.5 * (back + front), half_z = 0.5 * (front - back);
  s.add_quad({0, 0, mid_z}, Vec3d::UnitX(), Vec3d::UnitZ(), half_width, half_z, ade20k::kFloor);
  s.add_quad({0, height, mid_z}, Vec3d::UnitX(), Vec3d::UnitZ(), half_width, half_z, ade20k::kCeiling);
  s.add_quad({0, 0.5 * height, back}, Vec3d::UnitX(), Vec3d::UnitY(), half_width, 0.5 * height,
             ade20k::kWall);
}

void add_rug(Scene& s, double x, double z, double half_x, double half_z) {
  s.add_quad({x, 0.005, z}, Vec3d::UnitX(), Vec3d::UnitZ(), half_x, half_z, ade20k::kRug);
}

Scene make_box_room(double w, double h, double l) {
  Scene s;
  const double hx = 0.5 * w, hz = 0.5 * l;
  s.add_quad({0, 0, 0}, Vec3d::UnitX(), Vec3d::UnitZ(), hx, hz, ade20k::kFloor);
  s.add_quad({0, h, 0}, Vec3d::UnitX(), Vec3d::UnitZ(), hx, hz, ade20k::kCeiling);
  s.add_quad({0, 0.5 * h, -hz}, Vec3d::UnitX(), Vec3d::UnitY(), hx, 0.5 * h, ade20k::kWall);
  s.add_quad({0, 0.5 * h, hz}, Vec3d::UnitX(), Vec3d::UnitY(), hx, 0.5 * h, ade20k::kWall);
  s.add_quad({-hx, 0.5 * h, 0}, Vec3d::UnitZ(), Vec3d::UnitY(), hz, 0.5 * h, ade20k::kWall);
  s.add_quad({hx, 0.5 * h, 0}, Vec3d::UnitZ(), Vec3d::UnitY(), hz, 0.5 * h, ade20k::kWall);
  return s;
}

Scene make_corner_room(double apex_distance, double height) {
  Scene s;
  const Vec3d apex(0, 0, -apex_distance);
  const double len = 12.0;
  for (const double side : {1.0, -1.0}) {
    const Vec3d dir = Vec3d(side, 0, 1).normalized();
    s.add_quad(apex + dir * (0.5 * len) + Vec3d(0, 0.5 * height, 0), dir, Vec3d::UnitY(), 0.5 * len,
               0.5 * height, ade20k::kWall);
  }
  // Floor and ceiling cover the wedge in front of both walls.
  s.add_quad({0, 0, 0}, Vec3d::UnitX(), Vec3d::UnitZ(), 12.0, apex_distance, ade20k::kFloor);
  s.add_quad({0, height, 0}, Vec3d::UnitX(), Vec3d::UnitZ(), 12.0, apex_distance, ade20k::kCeiling);
  return s;
}

}  // namespace

Eigen::Vector3f shaded_color(std::int32_t label, double depth) {
  return ade20k::color(label) * shade(depth);
}

std::span<const std::int32_t> vocabulary() { return kVocabulary; }

std::int32_t classify(const Eigen::Vector3f& rgb) {
  const float n = rgb.norm();
  if (n < 1e-4f) return kUnlabeled;
  const Eigen::Vector3f dir = rgb / n;
  const auto& dirs = unit_palette().directions;
  std::size_t best = 0;
  float best_dot = -2.f;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const float d = dir.dot(dirs[i]);
    if (d > best_dot) {
      best_dot = d;
      best = i;
    }
  }
  return kVocabulary[best];
}

double decode_depth(const Eigen::Vector3f& rgb, std::int32_t label) {
  const Eigen::Vector3f base = ade20k::color(label);
  // Least-squares brightness ratio along the palette direction.
  const double ratio = std::clamp(double(rgb.dot(base)) / double(base.squaredNorm()), 1e-6, 1.0);
  return std::max(-kShadeLength * std::log(ratio), 0.05);
}

void Scene::add_quad(const Vec3d& center, const Vec3d& u, const Vec3d& v, double half_u,
                     double half_v, std::int32_t label) {
  quads.push_back({center, u.normalized(), v.normalized(), half_u, half_v, label});
}

void Scene::add_box(const Vec3d& lo, const Vec3d& hi, std::int32_t label) {
  const Vec3d c = 0.5 * (lo + hi);
  const Vec3d h = 0.5 * (hi - lo);
  add_quad({c.x(), c.y(), lo.z()}, Vec3d::UnitX(), Vec3d::UnitY(), h.x(), h.y(), label);
  add_quad({c.x(), c.y(), hi.z()}, Vec3d::UnitX(), Vec3d::UnitY(), h.x(), h.y(), label);
  add_quad({lo.x(), c.y(), c.z()}, Vec3d::UnitZ(), Vec3d::UnitY(), h.z(), h.y(), label);
  add_quad({hi.x(), c.y(), c.z()}, Vec3d::UnitZ(), Vec3d::UnitY(), h.z(), h.y(), label);
  add_quad({c.x(), lo.y(), c.z()}, Vec3d::UnitX(), Vec3d::UnitZ(), h.x(), h.z(), label);
  add_quad({c.x(), hi.y(), c.z()}, Vec3d::UnitX(), Vec3d::UnitZ(), h.x(), h.z(), label);
}

Scene Scene::transformed(const RigidTransformd& t) const {
  Scene out;
  out.quads.reserve(quads.size());
  for (const auto& q : quads) {
    out.quads.push_back({t(q.center), t.rotation * q.u_axis, t.rotation * q.v_axis, q.half_u,
                         q.half_v, q.label});
  }
  return out;
}

SceneRender render_scene(const Scene& scene, const CameraView& cam) {
  const int w = cam.width_px, h = cam.height_px;
  SceneRender out{ColorImage(w, h), DepthImage::Constant(h, w, kMissingDepth),
                  LabelImage::Constant(h, w, kUnlabeled)};
  const double f = cam.focal_px();
  const Vec3d origin = cam.position();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // Ray with unit camera-space depth, so the hit parameter is the z-depth.
      const Vec3d local((x + 0.5 - cam.cx()) / f, -(y + 0.5 - cam.cy()) / f, -1.0);
      const Vec3d dir = cam.pose.rotation * local;
      double best = std::numeric_limits<double>::infinity();
      std::int32_t label = kUnlabeled;
      for (const auto& q : scene.quads) {
        const Vec3d n = q.u_axis.cross(q.v_axis);
        const double denom = n.dot(dir);
        if (std::abs(denom) < 1e-12) continue;
        const double t = n.dot(q.center - origin) / denom;
        if (t <= 1e-6 || t >= best) continue;
        const Vec3d rel = origin + t * dir - q.center;
        if (std::abs(rel.dot(q.u_axis)) > q.half_u || std::abs(rel.dot(q.v_axis)) > q.half_v) continue;
        best = t;
        label = q.label;
      }
      if (label == kUnlabeled) continue;
      out.depth(y, x) = static_cast<float>(best);
      out.labels(y, x) = label;
      out.color.at(x, y) = shaded_color(label, best).transpose().array();
    }
  }
  return out;
}

std::span<const std::string_view> scene_ids() { return kSceneIds; }

Scene make_tilted_floor_scene(double tilt_deg, double offset, double wall_distance, double height) {
  Scene s;
  add_straight_room(s, wall_distance, height);
  const Vec3d pivot(0, 1.5, 0);
  const Mat3d r = Eigen::AngleAxisd(deg2rad(tilt_deg), Vec3d::UnitX()).toRotationMatrix();
  const RigidTransformd about_pivot{r, pivot - r * pivot + Vec3d(0, offset, 0)};
  return s.transformed(about_pivot);
}

Scene make_scene(std::string_view id) {
  Scene s;
  if (id == "box_room") return make_box_room(4.0, 2.5, 4.0);
  if (id == "two_plane") {
    s.add_quad({-50, 0, -1}, Vec3d::UnitX(), Vec3d::UnitY(), 50, 50, ade20k::kWall);
    s.add_quad({50, 0, -3}, Vec3d::UnitX(), Vec3d::UnitY(), 50, 50, ade20k::kWall);
    return s;
  }
  if (id == "tilted_floor") return make_tilted_floor_scene(20.0, 0.0);
  if (id == "corner_room") return make_corner_room(4.0, 2.6);
  if (id == "furnished_person") {
    add_straight_room(s, 4.0, 2.6);
    add_rug(s, 0.3, -2.2, 1.0, 0.8);
    s.add_box({-1.8, 0, -4.0}, {-0.9, 1.6, -3.5}, ade20k::kCabinet);
    s.add_box({0.1, 0, -2.8}, {0.6, 1.75, -2.5}, ade20k::kPerson);
    return s;
  }
  if (id == "office") {
    add_straight_room(s, 4.0, 2.6);
    add_rug(s, 0.0, -3.05, 1.2, 0.4);
    s.add_box({-1.6, 0, -4.0}, {-0.4, 1.8, -3.5}, ade20k::kCabinet);
    s.add_box({0.9, 0, -3.8}, {1.3, 1.1, -3.4}, ade20k::kPlant);
    return s;
  }
  if (id == "lounge") {
    add_straight_room(s, 4.5, 2.6);
    add_rug(s, 0.2, -2.6, 1.4, 0.9);
    s.add_box({-1.0, 0, -4.5}, {1.0, 0.8, -3.7}, ade20k::kSofa);
    return s;
  }
  if (id == "studio") {
    add_straight_room(s, 3.8, 2.6);
    s.add_box({-1.2, 0, -3.8}, {-0.7, 1.4, -3.3}, ade20k::kPlant);
    s.add_box({0.4, 0, -3.8}, {1.6, 0.9, -3.3}, ade20k::kCabinet);
    return s;
  }
  if (id == "bedroom") {
    add_straight_room(s, 4.2, 2.6);
    add_rug(s, -0.3, -2.4, 1.0, 0.6);
    s.add_box({-0.2, 0, -4.2}, {1.5, 0.6, -3.2}, ade20k::kSofa);
    s.add_box({-1.6, 0, -4.2}, {-1.2, 1.0, -3.8}, ade20k::kPlant);
    return s;
  }
  throw std::invalid_argument("unknown synthetic scene '" + std::string(id) + "'");
}

CameraView default_capture_camera(int width, int height) {
  CameraView cam;
  cam.pose.translation = Vec3d(0, 1.5, 0);
  cam.width_px = width;
  cam.height_px = height;
  return cam;
}

SceneRender synthetic_scene_oracle(std::string_view scene_id, const CameraView& cam) {
  return render_scene(make_scene(scene_id), cam);
}

std::string canned_caption(std::string_view scene_id) {
  static const std::map<std::string_view, std::string> table{
      {"box_room", "room space with bare walls"},
      {"two_plane", "room space with bare walls"},
      {"tilted_floor", "room space with bare walls"},
      {"corner_room", "room space with bare walls"},
      {"furnished_person", "office space with cabinet, rug and person"},
      {"office", "office space with cabinet, rug and plant"},
      {"lounge", "living room space with sofa and rug"},
      {"studio", "office space with cabinet and plant"},
      {"bedroom", "living room space with sofa, plant and rug"},
  };
  const auto it = table.find(scene_id);
  if (it == table.end()) throw std::invalid_argument("unknown synthetic scene '" + std::string(scene_id) + "'");
  return it->second;
}

// ---------------------------------------------------------------------------

DepthImage DepthFromShading::predict(const ColorImage& color, const DepthImage* known_depth,
                                     const MaskImage* known_mask) {
  const int w = color.width, h = color.height;
  if ((known_depth == nullptr) != (known_mask == nullptr)) {
    throw std::invalid_argument("depth backend: known depth and mask must be given together");
  }
  if (known_depth && (!same_size(*known_depth, w, h) || !same_size(*known_mask, w, h))) {
    throw std::invalid_argument("depth backend: known depth size differs from image");
  }
  DepthImage out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (known_mask && (*known_mask)(y, x)) {
        out(y, x) = (*known_depth)(y, x);
        continue;
      }
      const Eigen::Vector3f rgb = color.at(x, y).transpose().matrix();
      const std::int32_t label = classify(rgb);
      out(y, x) = label == kUnlabeled ? static_cast<float>(kShadeLength)
                                      : static_cast<float>(decode_depth(rgb, label));
    }
  }
  return out;
}

LabelImage ChromaSegmenter::segment(const ColorImage& color) {
  LabelImage out(color.height, color.width);
  for (int y = 0; y < color.height; ++y)
    for (int x = 0; x < color.width; ++x) out(y, x) = classify(color.at(x, y).transpose().matrix());
  return out;
}

ColorImage PriorPainter::inpaint(const InpaintRequest& request) {
  const ColorImage& in = request.color;
  const int w = in.width, h = in.height;
  if (!same_size(request.mask, w, h)) throw std::invalid_argument("inpaint: mask size differs from image");
  ColorImage out = in;

  // Mean of unmasked pixels 4-adjacent to the mask.
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  long count = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (request.mask(y, x)) continue;
      const bool border = (x > 0 && request.mask(y, x - 1)) || (x + 1 < w && request.mask(y, x + 1)) ||
                          (y > 0 && request.mask(y - 1, x)) || (y + 1 < h && request.mask(y + 1, x));
      if (!border) continue;
      sum += in.at(x, y).transpose().matrix().cast<double>();
      ++count;
    }
  }
  const Eigen::Vector3f fill =
      count > 0 ? Eigen::Vector3f((sum / double(count)).cast<float>()) : Eigen::Vector3f::Constant(0.5f);

  const ConditioningImage* semantic = request.find(ConditioningKind::kSemantic);
  const ConditioningImage* depth = request.find(ConditioningKind::kDepth);
  const bool structured = semantic && depth && semantic->image.same_size(w, h) && depth->image.same_size(w, h);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!request.mask(y, x)) continue;
      if (structured) {
        const Eigen::Vector3f sem = semantic->image.at(x, y).transpose().matrix();
        const std::int32_t label = classify(sem);
        if (label != kUnlabeled) {
          // Conditioning depth is near-bright: value = 1 - relative depth.
          const double rel = 1.0 - double(depth->image.at(x, y)(0));
          const double metric = std::max(rel, 1e-3) * kRelativeDepthScale;
          out.at(x, y) = shaded_color(label, metric).transpose().array();
          continue;
        }
      }
      out.at(x, y) = fill.transpose().array();
    }
  }
  return out;
}

std::string HistogramCaptioner::caption(const ColorImage& color) {
  std::map<std::int32_t, long> counts;
  for (Eigen::Index i = 0; i < color.pixels.rows(); ++i) {
    const std::int32_t label = classify(color.pixels.row(i).transpose().matrix());
    if (label != kUnlabeled && !ade20k::is_structural(label)) ++counts[label];
  }
  const long min_count = std::max<long>(1, static_cast<long>(0.002 * double(color.pixels.rows())));
  std::vector<std::pair<long, std::int32_t>> present;
  for (const auto& [label, n] : counts)
    if (n >= min_count) present.emplace_back(n, label);
  // Most frequent first; person always last so it reads as an afterthought.
  std::sort(present.begin(), present.end(), [](const auto& a, const auto& b) {
    const bool pa = a.second == ade20k::kPerson, pb = b.second == ade20k::kPerson;
    if (pa != pb) return pb;
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  auto has = [&](std::int32_t id) { return counts.contains(id) && counts[id] >= min_count; };
  std::string room = "room";
  if (has(ade20k::kSofa)) room = "living room";
  else if (has(ade20k::kCabinet)) room = "office";
  else if (has(ade20k::kPlant)) room = "studio";

  if (present.empty()) return room + " space with bare walls";
  std::string objects;
  for (std::size_t i = 0; i < present.size(); ++i) {
    if (i > 0) objects += (i + 1 == present.size()) ? " and " : ", ";
    objects += ade20k::name(present[i].second);
  }
  return room + " space with " + objects;
}

LlmReply TemplateLlm::complete(const LlmRequest& request) {
  if (request.messages.empty()) throw std::invalid_argument("llm: empty request");
  const std::string& user = request.messages.back().content;
  bool wants_descriptions = false;
  for (const auto& fn : request.functions)
    if (fn.value("name", "") == kSetDescriptionFunction) wants_descriptions = true;

  if (!wants_descriptions) {
    // Floor description from the quoted caption.
    const auto open = user.find('"');
    const auto close = open == std::string::npos ? open : user.find('"', open + 1);
    const std::string caption = close == std::string::npos ? std::string() : user.substr(open + 1, close - open - 1);
    return {room_type_of(caption) + " space with wooden floor", std::nullopt};
  }

  const auto parsed = parse_region_user_message(user);
  std::string room = "room";
  if (!parsed.known.empty()) room = room_type_of(parsed.known.front().second);
  static const std::array<std::string_view, 12> pool{
      "bookshelf",   "armchair",     "floor lamp",    "coffee table", "potted fern",  "wall art",
      "side table",  "writing desk", "storage bench", "framed photos", "pendant light", "ottoman"};
  nlohmann::json descriptions = nlohmann::json::array();
  for (const double yaw : parsed.unknown_yaws) {
    const auto k = static_cast<std::size_t>(std::lround(wrap_degrees(yaw) / 15.0));
    const std::string text = room + " space with " + std::string(pool[k % pool.size()]) + ", " +
                             std::string(pool[(k + 5) % pool.size()]) + " and " +
                             std::string(pool[(k + 9) % pool.size()]);
    descriptions.push_back({{"y_rotation", yaw}, {"description", text}});
  }
  LlmReply reply;
  reply.function_call = LlmFunctionCall{std::string(kSetDescriptionFunction),
                                        nlohmann::json{{"descriptions", descriptions}}.dump()};
  return reply;
}

BackendSet make_backends() {
  BackendSet set;
  set.depth = std::make_shared<DepthFromShading>();
  set.inpaint = std::make_shared<PriorPainter>();
  set.seg = std::make_shared<ChromaSegmenter>();
  set.vlm = std::make_shared<HistogramCaptioner>();
  set.llm = std::make_shared<TemplateLlm>();
  return set;
}

}  // namespace spaceblender::synthetic
