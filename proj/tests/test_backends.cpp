#include "spaceblender/ade20k.hpp"
#include "spaceblender/encoding.hpp"
#include "spaceblender/image_io.hpp"
#include "spaceblender/remote_inpaint.hpp"
#include "test_util.hpp"

#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <thread>

using namespace sbt;

namespace {

// Colors on the 8-bit lattice so PNG transport is lossless.
ColorImage lattice_image(int w, int h) {
  ColorImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      img.at(x, y) = Eigen::Array3f(float((x * 9) % 256), float((y * 5) % 256), float((x * y) % 256)) / 255.f;
  return img;
}

InpaintRequest lattice_request(int w, int h) {
  InpaintRequest r;
  r.color = lattice_image(w, h);
  r.mask = MaskImage::Constant(h, w, false);
  r.mask.block(h / 4, w / 4, h / 2, w / 2).setConstant(true);
  r.prompt = "office space with desk";
  r.negative_prompt = "person";
  r.seed = 1234;
  r.conditioning = {{ConditioningKind::kLayout, ColorImage(w, h), "layout-model", 0.6},
                    {ConditioningKind::kDepth, ColorImage(w, h), "depth-model", 0.3},
                    {ConditioningKind::kSemantic, ColorImage(w, h), "seg-model", 0.0}};
  return r;
}

// Mock WebUI server on an ephemeral port; `handler` maps a request body to a reply.
class MockServer {
 public:
  using Handler = std::function<void(const nlohmann::json&, httplib::Response&)>;
  explicit MockServer(Handler handler) {
    server_.Post("/sdapi/v1/img2img", [this, handler](const httplib::Request& req, httplib::Response& res) {
      ++requests;
      handler(nlohmann::json::parse(req.body), res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
  std::atomic<int> requests{0};

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

void reply_image(httplib::Response& res, const ColorImage& img) {
  res.set_content(nlohmann::json{{"images", {base64_encode(encode_png(img))}}}.dump(), "application/json");
}

RemoteInpaintOptions options_for(const std::string& endpoint, std::vector<std::chrono::milliseconds>* sleeps) {
  RemoteInpaintOptions o;
  o.endpoint = endpoint;
  o.timeout = std::chrono::seconds(5);
  o.sleep = [sleeps](std::chrono::milliseconds d) { sleeps->push_back(d); };
  return o;
}

}  // namespace

TEST_CASE("payload carries prompt, images and ordered conditioning units") {
  const auto req = lattice_request(32, 16);
  RemoteInpaintOptions o;
  o.endpoint = "http://x";
  const auto body = build_inpaint_payload(req, o);
  CHECK(body["prompt"] == "office space with desk");
  CHECK(body["negative_prompt"] == "person");
  CHECK(body["seed"] == 1234);
  CHECK(body["steps"] == 30);
  CHECK(body["sampler_name"] == "Euler a");
  CHECK(body["width"] == 32);
  CHECK(body["height"] == 16);
  const auto init = decode_image(base64_decode(body["init_images"][0].get<std::string>()));
  CHECK((init.pixels == req.color.pixels).all());
  const auto mask = decode_image(base64_decode(body["mask"].get<std::string>()));
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 32; ++x) CHECK((mask.at(x, y)(0) == 1.f) == req.mask(y, x));
  const auto& units = body["alwayson_scripts"]["controlnet"]["args"];
  REQUIRE(units.size() == 3);
  CHECK(units[0]["model_name"] == "layout-model");
  CHECK(units[0]["weight"] == 0.6);
  CHECK(units[1]["model_name"] == "depth-model");
  CHECK(units[2]["model_name"] == "seg-model");
  CHECK(units[2]["weight"] == 0.0);
}

TEST_CASE("remote inpaint: echo server returns the input") {
  MockServer server([](const nlohmann::json& body, httplib::Response& res) {
    res.set_content(nlohmann::json{{"images", {body["init_images"][0]}}}.dump(), "application/json");
  });
  std::vector<std::chrono::milliseconds> sleeps;
  RemoteInpaintBackend backend(options_for(server.endpoint(), &sleeps));
  const auto req = lattice_request(40, 24);
  const auto out = backend.inpaint(req);
  CHECK((out.pixels == req.color.pixels).all());
  CHECK(server.requests == 1);
  CHECK(sleeps.empty());
  CHECK(backend.identity() == "remote-a1111-inpaint:" + server.endpoint() + "/sdapi/v1/img2img");
}

TEST_CASE("remote inpaint: drifting server has unmasked pixels restored") {
  MockServer server([](const nlohmann::json& body, httplib::Response& res) {
    auto img = decode_image(base64_decode(body["init_images"][0].get<std::string>()));
    img.pixels = 1.f - img.pixels;
    reply_image(res, img);
  });
  std::vector<std::chrono::milliseconds> sleeps;
  RemoteInpaintBackend backend(options_for(server.endpoint(), &sleeps));
  const auto req = lattice_request(40, 24);
  const auto out = backend.inpaint(req);
  for (int y = 0; y < 24; ++y) {
    for (int x = 0; x < 40; ++x) {
      if (req.mask(y, x)) {
        CHECK((out.at(x, y) - (1.f - req.color.at(x, y))).abs().maxCoeff() < 1e-6f);
      } else {
        CHECK((out.at(x, y) == req.color.at(x, y)).all());
      }
    }
  }
}

TEST_CASE("remote inpaint: a differently sized reply is resampled") {
  MockServer server([](const nlohmann::json&, httplib::Response& res) { reply_image(res, lattice_image(80, 48)); });
  std::vector<std::chrono::milliseconds> sleeps;
  RemoteInpaintBackend backend(options_for(server.endpoint(), &sleeps));
  const auto out = backend.inpaint(lattice_request(40, 24));
  CHECK(out.same_size(40, 24));
}

TEST_CASE("remote inpaint: transient failures are retried with doubling backoff") {
  MockServer server([](const nlohmann::json& body, httplib::Response& res) {
    static int calls = 0;
    if (++calls < 3) {
      res.status = 500;
      return;
    }
    res.set_content(nlohmann::json{{"images", {body["init_images"][0]}}}.dump(), "application/json");
  });
  std::vector<std::chrono::milliseconds> sleeps;
  RemoteInpaintBackend backend(options_for(server.endpoint(), &sleeps));
  CHECK_NOTHROW(backend.inpaint(lattice_request(16, 16)));
  CHECK(server.requests == 3);
  CHECK(sleeps == std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(2000), std::chrono::milliseconds(4000)});
}

TEST_CASE("remote inpaint: unreachable endpoint fails after three retries") {
  std::vector<std::chrono::milliseconds> sleeps;
  // Port 9 on loopback refuses connections.
  RemoteInpaintBackend backend(options_for("http://127.0.0.1:9", &sleeps));
  try {
    backend.inpaint(lattice_request(16, 16));
    FAIL("expected an error");
  } catch (const RemoteInpaintError& e) {
    CHECK(e.attempts() == 4);
    CHECK(e.stage() == "backends");
  }
  CHECK(sleeps == std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(2000), std::chrono::milliseconds(4000),
                                                         std::chrono::milliseconds(8000)});
}

TEST_CASE("remote inpaint: undecodable replies are typed errors") {
  MockServer server([](const nlohmann::json&, httplib::Response& res) { res.set_content("{\"images\": []}", "application/json"); });
  std::vector<std::chrono::milliseconds> sleeps;
  auto o = options_for(server.endpoint(), &sleeps);
  o.retries = 1;
  RemoteInpaintBackend backend(o);
  CHECK_THROWS_AS(backend.inpaint(lattice_request(16, 16)), RemoteInpaintError);
  CHECK(server.requests == 2);
  CHECK_THROWS_AS(parse_inpaint_response("not json"), std::runtime_error);
  CHECK_THROWS_AS(RemoteInpaintBackend(RemoteInpaintOptions{}), std::invalid_argument);
}

TEST_CASE("synthetic backends are pure functions of their inputs") {
  auto b = synthetic::make_backends();
  REQUIRE(b.complete());
  const auto cam = synthetic::default_capture_camera(96, 96);
  const auto scene = synthetic::synthetic_scene_oracle("lounge", cam);
  const auto d1 = b.depth->predict(scene.color), d2 = b.depth->predict(scene.color);
  CHECK((d1 == d2).all());
  CHECK((b.seg->segment(scene.color) == b.seg->segment(scene.color)).all());
  CHECK(b.vlm->caption(scene.color) == b.vlm->caption(scene.color));
  auto req = lattice_request(96, 96);
  req.color = scene.color;
  const auto p1 = b.inpaint->inpaint(req), p2 = b.inpaint->inpaint(req);
  CHECK((p1.pixels == p2.pixels).all());
  LlmRequest lr;
  lr.messages.push_back({"user", "office"});
  CHECK(b.llm->complete(lr).content == b.llm->complete(lr).content);
  const auto ids = b.identities();
  for (const char* k : {"depth", "inpaint", "seg", "vlm", "llm"}) CHECK(ids[k].is_string());
}

TEST_CASE("synthetic depth and segmentation invert the shading convention") {
  synthetic::DepthFromShading depth;
  synthetic::ChromaSegmenter seg;
  const auto cam = synthetic::default_capture_camera(64, 64);
  const auto scene = synthetic::synthetic_scene_oracle("office", cam);
  const auto d = depth.predict(scene.color, nullptr, nullptr);
  const auto labels = seg.segment(scene.color);
  CHECK((labels == scene.labels).all());
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (!is_missing(scene.depth(i))) CHECK(std::abs(d(i) - scene.depth(i)) <= 1e-3f * scene.depth(i));

  // Known pixels pass through bit-exactly.
  DepthImage known = DepthImage::Constant(64, 64, 0.123f);
  MaskImage mask = MaskImage::Constant(64, 64, false);
  mask.topRows(10).setConstant(true);
  const auto completed = depth.predict(scene.color, &known, &mask);
  CHECK((completed.topRows(10) == 0.123f).all());
  CHECK((completed.bottomRows(54) == d.bottomRows(54)).all());
}

TEST_CASE("prior painter fills masked pixels with the closed-form shading") {
  synthetic::PriorPainter painter;
  InpaintRequest req = lattice_request(16, 16);
  ColorImage sem(16, 16), dep(16, 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      sem.at(x, y) = ade20k::color(y < 8 ? ade20k::kWall : ade20k::kFloor).transpose().array();
      dep.at(x, y).setConstant(1.f - 0.05f * float(x));
    }
  req.conditioning = {{ConditioningKind::kDepth, dep, "d", 0.3}, {ConditioningKind::kSemantic, sem, "s", 0.0}};
  const auto out = painter.inpaint(req);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      if (!req.mask(y, x)) {
        CHECK((out.at(x, y) == req.color.at(x, y)).all());
        continue;
      }
      const double rel = 1.0 - double(dep.at(x, y)(0));
      const Eigen::Vector3f expect =
          ade20k::color(y < 8 ? ade20k::kWall : ade20k::kFloor) * synthetic::shade(std::max(rel, 1e-3) * 4.0);
      CHECK((out.at(x, y).transpose().matrix() - expect).cwiseAbs().maxCoeff() < 1e-6f);
    }

  // Without conditioning the mask takes the mean of its border.
  InpaintRequest plain = lattice_request(16, 16);
  plain.conditioning.clear();
  const auto filled = painter.inpaint(plain);
  CHECK((filled.at(8, 8) == filled.at(9, 9)).all());
}

TEST_CASE("synthetic scene oracle") {
  const auto cam = synthetic::default_capture_camera();
  const auto box = synthetic::synthetic_scene_oracle("box_room", cam);
  CHECK(box.depth(256, 256) == 2.0f);
  CHECK(box.depth(255, 255) == 2.0f);
  CHECK(box.labels(256, 256) == ade20k::kWall);
  CHECK_FALSE(box.depth.isInf().any());

  const auto scene = synthetic::make_tilted_floor_scene(20.0, 0.0);
  bool found = false;
  for (const auto& q : scene.quads) {
    if (q.label != ade20k::kFloor) continue;
    const Vec3d n = q.u_axis.cross(q.v_axis).normalized();
    CHECK(std::abs(std::abs(n.dot(Vec3d::UnitY())) - std::cos(deg2rad(20.0))) < 1e-12);
    found = true;
  }
  CHECK(found);
  CHECK_THROWS_AS(synthetic::synthetic_scene_oracle("moon_base", cam), std::invalid_argument);
  CHECK(synthetic::scene_ids().size() == 9);
}

TEST_CASE("palette resource parses and matches the published colors") {
  const auto& p = ade20k::palette();
  REQUIRE(p.size() == 150);
  CHECK(p[0].name.find("wall") != std::string::npos);
  CHECK(p[0].rgb == std::array<std::uint8_t, 3>{120, 120, 120});
  CHECK(p[3].rgb == std::array<std::uint8_t, 3>{80, 50, 50});
  CHECK(p[5].rgb == std::array<std::uint8_t, 3>{120, 120, 80});
  CHECK(ade20k::color(ade20k::kWall) == Eigen::Vector3f(120.f / 255.f, 120.f / 255.f, 120.f / 255.f));
  CHECK_THROWS_AS(ade20k::color(150), std::out_of_range);
  CHECK_THROWS(ade20k::parse_palette_csv("id,name,r,g,b\n0,wall,1,2\n"));
}
