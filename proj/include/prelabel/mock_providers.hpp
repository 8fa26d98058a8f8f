#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "prelabel/image.hpp"
#include "prelabel/providers.hpp"

namespace prelabel {

/// Reserved background color of synthetic scenes; never a class color.
inline constexpr Rgb kBackgroundColor{32, 32, 32};

/// Color that marks pixels of class `index` in synthetic scenes.
Rgb class_color(std::size_t index);

struct MockConfig {
  /// Known classes; index i is painted with class_color(i).
  std::vector<std::string> classes;
  std::uint64_t seed = 0;
  /// Each planted object yields between 1 and this many detections.
  int max_duplicates = 5;
  /// Maximum edge displacement of a duplicate, as a fraction of box size.
  double jitter = 0.01;
  /// Every pair of duplicates of one object keeps IoU above this.
  double min_duplicate_iou = 0.92;
  /// Probability that a detection carries a wrong class name.
  double mislabel_probability = 0.0;
  double min_score = 0.25;
  double max_score = 0.95;
  /// Standard deviation of Gaussian noise added to crop embeddings before
  /// normalization. Large values break class alignment on purpose.
  double embedding_noise = 0.0;
  int click_radius = 3;
};

/// Deterministic stand-in for detector, embedder and mask model. Planted
/// objects are solid rectangles of class_color(i) on a synthetic image; the
/// embedding space has one orthonormal axis per known class plus a few
/// spare axes.
class MockProviders final : public Detector, public Embedder, public MaskProvider {
 public:
  static constexpr std::size_t kSpareDims = 4;

  explicit MockProviders(MockConfig config);

  std::vector<Detection> detect(const Image& image, std::span<const std::string> class_names,
                                double threshold) const override;
  Embedding embed_image_crop(const Image& image, const BBox& box) const override;
  std::vector<Embedding> embed_texts(std::span<const std::string> labels) const override;
  BinaryMask generate_mask(const Image& image, const MaskSeed& seed) const override;

  std::size_t dimension() const { return config_.classes.size() + kSpareDims; }
  const MockConfig& config() const { return config_; }

  struct PlantedRegion {
    std::size_t class_index;
    BBox box;
  };
  /// Solid class-colored regions found in the image, raster order.
  std::vector<PlantedRegion> find_planted(const Image& image) const;

 private:
  std::optional<std::size_t> class_of_color(Rgb c) const;
  std::optional<std::size_t> class_index(const std::string& label) const;

  MockConfig config_;
  std::vector<std::string> normalized_;
};

Providers make_mock_providers(MockConfig config);

}  // namespace prelabel
