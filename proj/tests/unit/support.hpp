#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "prelabel/geometry.hpp"
#include "prelabel/image.hpp"
#include "prelabel/mock_providers.hpp"

namespace testing {

/// Fresh directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("prelabel-test-" + std::to_string(rd()) + "-" + std::to_string(++counter));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline prelabel::BBox random_box(std::mt19937_64& rng, double extent = 100, double min_side = 1,
                                 double max_side = 40) {
  const double w = uniform(rng, min_side, max_side);
  const double h = uniform(rng, min_side, max_side);
  const double x = uniform(rng, 0, extent - w);
  const double y = uniform(rng, 0, extent - h);
  return {x, y, x + w, y + h};
}

struct Planted {
  std::size_t class_index;
  prelabel::BBox box;
};

/// Flat background with class-colored rectangles, encoded as PPM.
inline prelabel::Image planted_image(int w, int h, const std::vector<Planted>& objects,
                                     std::string name = "planted.ppm") {
  prelabel::Image img;
  img.name = std::move(name);
  img.width = w;
  img.height = h;
  img.rgb.resize(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) img.set_pixel(x, y, prelabel::kBackgroundColor);
  }
  for (const auto& o : objects) {
    for (int y = static_cast<int>(o.box.y1); y < static_cast<int>(o.box.y2); ++y) {
      for (int x = static_cast<int>(o.box.x1); x < static_cast<int>(o.box.x2); ++x) {
        img.set_pixel(x, y, prelabel::class_color(o.class_index));
      }
    }
  }
  img.encoded = prelabel::encode_ppm(img);
  return img;
}

}  // namespace testing
