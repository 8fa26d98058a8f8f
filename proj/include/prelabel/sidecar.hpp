#pragma once

#include <memory>
#include <semaphore>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "prelabel/providers.hpp"
#include "prelabel/rle.hpp"

namespace httplib {
class Server;
}

namespace prelabel {

/// Client for an external inference process speaking JSON over HTTP:
///   POST /detect      {image, classes, threshold} -> {detections: [{box, label, score}]}
///   POST /embed_image {image, box}                -> {vector}
///   POST /embed_text  {labels}                    -> {vectors}
///   POST /mask        {image, seed}               -> {mask_rle: {counts, size}}
/// Images travel as base64 of their encoded bytes. At most `max_in_flight`
/// requests are outstanding at once across all threads.
class SidecarClient final : public Detector, public Embedder, public MaskProvider {
 public:
  SidecarClient(std::string endpoint, int max_in_flight = 4, std::string model_id = {});
  ~SidecarClient() override;

  std::vector<Detection> detect(const Image& image, std::span<const std::string> class_names,
                                double threshold) const override;
  Embedding embed_image_crop(const Image& image, const BBox& box) const override;
  std::vector<Embedding> embed_texts(std::span<const std::string> labels) const override;
  BinaryMask generate_mask(const Image& image, const MaskSeed& seed) const override;

 private:
  nlohmann::json post(const std::string& path, const nlohmann::json& body) const;

  std::string endpoint_;
  std::string model_id_;
  mutable std::counting_semaphore<1024> slots_;
};

std::string base64_encode(std::string_view bytes);
/// Throws InputError on malformed input.
std::string base64_decode(std::string_view text);

nlohmann::json rle_to_json(const CocoRle& rle);
CocoRle rle_from_json(const nlohmann::json& j);

/// Serves the sidecar protocol from in-process providers. Used to stand up
/// a reference backend for tests and local development.
void mount_sidecar_routes(httplib::Server& server, Providers providers);

}  // namespace prelabel
