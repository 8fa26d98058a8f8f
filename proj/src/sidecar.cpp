#include "prelabel/sidecar.hpp"

#include <sodium.h>

#include <algorithm>
#include <cmath>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "prelabel/errors.hpp"
#include "prelabel/text.hpp"

namespace prelabel {

using nlohmann::json;

std::string base64_encode(std::string_view bytes) {
  const std::size_t cap =
      sodium_base64_encoded_len(bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  std::string out(cap, '\0');
  sodium_bin2base64(out.data(), cap, reinterpret_cast<const unsigned char*>(bytes.data()),
                    bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  out.resize(cap - 1);
  return out;
}

std::string base64_decode(std::string_view text) {
  std::string out(text.size() / 4 * 3 + 3, '\0');
  std::size_t len = 0;
  if (sodium_base642bin(reinterpret_cast<unsigned char*>(out.data()), out.size(), text.data(),
                        text.size(), "\r\n", &len, nullptr,
                        sodium_base64_VARIANT_ORIGINAL) != 0) {
    throw InputError("malformed base64 payload");
  }
  out.resize(len);
  return out;
}

json rle_to_json(const CocoRle& rle) {
  return {{"counts", rle.counts}, {"size", {rle.height, rle.width}}};
}

CocoRle rle_from_json(const json& j) {
  CocoRle rle;
  const auto& size = j.at("size");
  rle.height = size.at(0).get<int>();
  rle.width = size.at(1).get<int>();
  rle.counts = j.at("counts").get<std::vector<std::uint32_t>>();
  return rle;
}

namespace {

json box_json(const BBox& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

BBox box_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw InputError("box must be [x1, y1, x2, y2]");
  BBox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  if (!b.valid()) throw InputError("box must satisfy x1 <= x2, y1 <= y2");
  return b;
}

json seed_json(const MaskSeed& seed) {
  if (const auto* b = std::get_if<BBox>(&seed)) return {{"box", box_json(*b)}};
  const Point p = std::get<Point>(seed);
  return {{"point", {p.x, p.y}}};
}

MaskSeed seed_from_json(const json& j) {
  if (j.contains("box")) return box_from_json(j.at("box"));
  const auto& p = j.at("point");
  return Point{p.at(0).get<double>(), p.at(1).get<double>()};
}

}  // namespace

SidecarClient::SidecarClient(std::string endpoint, int max_in_flight, std::string model_id)
    : endpoint_(std::move(endpoint)), model_id_(std::move(model_id)),
      slots_(std::clamp(max_in_flight, 1, 1024)) {
  if (endpoint_.empty()) throw InputError("sidecar endpoint is empty");
}

SidecarClient::~SidecarClient() = default;

json SidecarClient::post(const std::string& path, const json& body) const {
  slots_.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{slots_};

  httplib::Client client(endpoint_);
  client.set_connection_timeout(5);
  client.set_read_timeout(120);
  json payload = body;
  if (!model_id_.empty()) payload["model_id"] = model_id_;
  auto res = client.Post(path, payload.dump(), "application/json");
  if (!res) {
    throw TransportError("sidecar " + endpoint_ + path + " unreachable: " +
                         httplib::to_string(res.error()));
  }
  if (res->status >= 400 && res->status < 500) {
    throw InputError("sidecar rejected " + path + " (" + std::to_string(res->status) +
                     "): " + res->body);
  }
  if (res->status != 200) {
    throw TransportError("sidecar " + path + " failed with status " +
                         std::to_string(res->status));
  }
  try {
    return json::parse(res->body);
  } catch (const json::exception& e) {
    throw TransportError("sidecar " + path + " returned invalid JSON: " + e.what());
  }
}

std::vector<Detection> SidecarClient::detect(const Image& image,
                                             std::span<const std::string> class_names,
                                             double threshold) const {
  if (!(threshold >= 0 && threshold <= 1)) throw InputError("threshold must be in [0, 1]");
  const json reply = post("/detect", {{"image", base64_encode(image.encoded)},
                                      {"classes", std::vector<std::string>(class_names.begin(),
                                                                           class_names.end())},
                                      {"threshold", threshold}});
  std::vector<Detection> out;
  try {
    for (const auto& d : reply.at("detections")) {
      Detection det{box_from_json(d.at("box")), d.at("label").get<std::string>(),
                    d.at("score").get<double>()};
      if (!(det.score >= 0 && det.score <= 1)) throw InputError("score out of [0, 1]");
      det.box = clip_box(det.box, image.width, image.height);
      if (normalize_label(det.label_text).empty() || det.score < threshold) continue;
      out.push_back(std::move(det));
    }
  } catch (const std::exception& e) {
    throw TransportError(std::string("sidecar /detect returned malformed detections: ") +
                         e.what());
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
  return out;
}

Embedding SidecarClient::embed_image_crop(const Image& image, const BBox& box) const {
  const BBox crop = checked_crop(image, box);
  const json reply =
      post("/embed_image", {{"image", base64_encode(image.encoded)}, {"box", box_json(crop)}});
  try {
    return normalized(reply.at("vector").get<std::vector<double>>());
  } catch (const std::exception& e) {
    throw TransportError(std::string("sidecar /embed_image returned a bad vector: ") + e.what());
  }
}

std::vector<Embedding> SidecarClient::embed_texts(std::span<const std::string> labels) const {
  if (labels.empty()) throw InputError("embed_texts: no labels");
  for (const auto& l : labels) {
    if (normalize_label(l).empty()) throw InputError("embed_texts: empty label");
  }
  const json reply = post(
      "/embed_text", {{"labels", std::vector<std::string>(labels.begin(), labels.end())}});
  std::vector<Embedding> out;
  try {
    for (const auto& v : reply.at("vectors")) out.push_back(normalized(v.get<std::vector<double>>()));
  } catch (const std::exception& e) {
    throw TransportError(std::string("sidecar /embed_text returned bad vectors: ") + e.what());
  }
  if (out.size() != labels.size()) {
    throw TransportError("sidecar /embed_text returned the wrong number of vectors");
  }
  return out;
}

BinaryMask SidecarClient::generate_mask(const Image& image, const MaskSeed& seed) const {
  const json reply =
      post("/mask", {{"image", base64_encode(image.encoded)}, {"seed", seed_json(seed)}});
  BinaryMask mask(1, 1);
  try {
    mask = rle_decode(rle_from_json(reply.at("mask_rle")));
  } catch (const std::exception& e) {
    throw TransportError(std::string("sidecar /mask returned a bad mask: ") + e.what());
  }
  if (mask.width() != image.width || mask.height() != image.height) {
    throw TransportError("sidecar /mask returned a mask of the wrong size");
  }
  return mask;
}

void mount_sidecar_routes(httplib::Server& server, Providers providers) {
  auto wrap = [](auto fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        const json body = json::parse(req.body);
        res.set_content(fn(body).dump(), "application/json");
      } catch (const InputError& e) {
        res.status = 422;
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      } catch (const json::exception& e) {
        res.status = 400;
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      } catch (const std::exception& e) {
        res.status = 500;
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      }
    };
  };
  auto image_of = [](const json& body) {
    return decode_image(base64_decode(body.at("image").get<std::string>()), "upload");
  };

  server.Post("/detect", wrap([providers, image_of](const json& body) {
                const Image img = image_of(body);
                const auto classes = body.at("classes").get<std::vector<std::string>>();
                const auto dets = providers.detector->detect(
                    img, classes, body.value("threshold", 0.0));
                json arr = json::array();
                for (const auto& d : dets) {
                  arr.push_back({{"box", box_json(d.box)}, {"label", d.label_text},
                                 {"score", d.score}});
                }
                return json{{"detections", arr}};
              }));
  server.Post("/embed_image", wrap([providers, image_of](const json& body) {
                const Image img = image_of(body);
                const Embedding e =
                    providers.embedder->embed_image_crop(img, box_from_json(body.at("box")));
                return json{{"vector", e.values}};
              }));
  server.Post("/embed_text", wrap([providers](const json& body) {
                const auto labels = body.at("labels").get<std::vector<std::string>>();
                json arr = json::array();
                for (const auto& e : providers.embedder->embed_texts(labels)) arr.push_back(e.values);
                return json{{"vectors", arr}};
              }));
  server.Post("/mask", wrap([providers, image_of](const json& body) {
                if (!providers.masks) throw InputError("no mask provider configured");
                const Image img = image_of(body);
                const BinaryMask m =
                    providers.masks->generate_mask(img, seed_from_json(body.at("seed")));
                return json{{"mask_rle", rle_to_json(rle_encode(m))}};
              }));
}

}  // namespace prelabel
