#include "spaceblender/remote_inpaint.hpp"

#include "spaceblender/encoding.hpp"
#include "spaceblender/image_io.hpp"

#include <httplib.h>

#include <thread>

namespace spaceblender {

const char* to_string(ConditioningKind kind) {
  switch (kind) {
    case ConditioningKind::kLayout: return "layout";
    case ConditioningKind::kDepth: return "depth";
    case ConditioningKind::kSemantic: return "semantic";
  }
  return "layout";
}

nlohmann::json BackendSet::identities() const {
  auto id = [](const auto& p) { return p ? nlohmann::json(p->identity()) : nlohmann::json(nullptr); };
  return {{"depth", id(depth)}, {"inpaint", id(inpaint)}, {"seg", id(seg)}, {"vlm", id(vlm)}, {"llm", id(llm)}};
}

nlohmann::json build_inpaint_payload(const InpaintRequest& request, const RemoteInpaintOptions& options) {
  const ColorImage& img = request.color;
  nlohmann::json units = nlohmann::json::array();
  for (const auto& c : request.conditioning) {
    units.push_back({{"image", base64_encode(encode_png(c.image))},
                     {"model_name", c.model_name},
                     {"model", c.model_name},
                     {"weight", c.weight},
                     {"module", "none"},
                     {"enabled", true}});
  }
  nlohmann::json body{
      {"prompt", request.prompt},
      {"negative_prompt", request.negative_prompt},
      {"seed", request.seed},
      {"steps", options.steps},
      {"sampler_name", options.sampler},
      {"cfg_scale", options.cfg_scale},
      {"denoising_strength", options.denoising_strength},
      {"width", img.width},
      {"height", img.height},
      {"init_images", {base64_encode(encode_png(img))}},
      {"mask", base64_encode(encode_mask_png(request.mask))},
      {"inpainting_fill", 1},
      {"inpaint_full_res", false},
      {"mask_blur", 0},
  };
  body["alwayson_scripts"] = {{"controlnet", {{"args", units}}}};
  return body;
}

ColorImage parse_inpaint_response(const std::string& body) {
  const auto doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw std::runtime_error("inpaint response is not JSON");
  if (!doc.contains("images") || !doc["images"].is_array() || doc["images"].empty() || !doc["images"][0].is_string()) {
    throw std::runtime_error("inpaint response has no images");
  }
  return decode_image(base64_decode(doc["images"][0].get<std::string>()));
}

void restore_unmasked(const ColorImage& input, const MaskImage& mask, ColorImage& output) {
  for (Eigen::Index i = 0; i < mask.size(); ++i)
    if (!mask(i)) output.pixels.row(i) = input.pixels.row(i);
}

RemoteInpaintBackend::RemoteInpaintBackend(RemoteInpaintOptions options) : options_(std::move(options)) {
  if (options_.endpoint.empty()) throw std::invalid_argument("remote inpaint: endpoint required");
  if (!options_.sleep) options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string RemoteInpaintBackend::identity() const { return "remote-a1111-inpaint:" + options_.endpoint + options_.route; }

ColorImage RemoteInpaintBackend::inpaint(const InpaintRequest& request) {
  const int w = request.color.width, h = request.color.height;
  if (!same_size(request.mask, w, h)) throw std::invalid_argument("inpaint: mask size differs from image");
  const std::string payload = build_inpaint_payload(request, options_).dump();

  httplib::Client client(options_.endpoint);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(options_.timeout).count());
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(options_.timeout).count());
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::seconds>(options_.timeout).count());

  std::string last_error;
  auto backoff = options_.initial_backoff;
  const int attempts = options_.retries + 1;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    auto res = client.Post(options_.route, payload, "application/json");
    if (!res) {
      last_error = "HTTP request failed: " + httplib::to_string(res.error());
    } else if (res->status != 200) {
      last_error = "HTTP status " + std::to_string(res->status);
    } else {
      try {
        ColorImage out = parse_inpaint_response(res->body);
        if (!out.same_size(w, h)) {
          out = resize_bilinear(out, w, h);
        }
        restore_unmasked(request.color, request.mask, out);
        return out;
      } catch (const std::exception& e) {
        last_error = std::string("decode failed: ") + e.what();
      }
    }
    if (attempt < attempts) {
      options_.sleep(backoff);
      backoff *= 2;
    }
  }
  throw RemoteInpaintError("remote inpaint at " + options_.endpoint + options_.route + ": " + last_error, attempts);
}

}  // namespace spaceblender
