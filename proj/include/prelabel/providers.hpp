#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "prelabel/geometry.hpp"
#include "prelabel/image.hpp"
#include "prelabel/postprocess.hpp"

namespace prelabel {

/// Raw detector output before verification and clustering.
struct Detection {
  BBox box;
  std::string label_text;
  double score = 0;
};

/// Unit-norm feature vector.
struct Embedding {
  std::vector<double> values;

  double dot(const Embedding& other) const;
  double norm() const;
};

/// Rescales to unit length. Throws InputError on a zero or non-finite vector.
Embedding normalized(std::vector<double> values);

using MaskSeed = std::variant<BBox, Point>;

class Detector {
 public:
  virtual ~Detector() = default;
  /// Score-descending detections with score >= threshold, boxes clipped to
  /// the image.
  virtual std::vector<Detection> detect(const Image& image,
                                        std::span<const std::string> class_names,
                                        double threshold) const = 0;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual Embedding embed_image_crop(const Image& image, const BBox& box) const = 0;
  virtual std::vector<Embedding> embed_texts(std::span<const std::string> labels) const = 0;
};

class MaskProvider {
 public:
  virtual ~MaskProvider() = default;
  virtual BinaryMask generate_mask(const Image& image, const MaskSeed& seed) const = 0;
};

/// Everything the pipeline needs from inference backends. `masks` may be
/// empty, in which case geometry stays axis-aligned.
struct Providers {
  std::shared_ptr<const Detector> detector;
  std::shared_ptr<const Embedder> embedder;
  std::shared_ptr<const MaskProvider> masks;
};

enum class ProviderKind { mock, sidecar };

struct ProviderConfig {
  ProviderKind kind = ProviderKind::mock;
  std::string endpoint;
  std::string model_id;
  double detection_threshold = 0.2;
  std::uint64_t seed = 0;
  int max_in_flight = 4;

  /// Throws InputError when the combination is unusable.
  void validate() const;
};

/// Builds the provider set for a project vocabulary. The mock uses the
/// vocabulary order as its class palette.
Providers make_providers(const ProviderConfig& config, std::span<const std::string> vocabulary);

/// Crop checks shared by all embedders: clips to the image and rejects
/// crops smaller than one square pixel.
BBox checked_crop(const Image& image, const BBox& box);

}  // namespace prelabel
