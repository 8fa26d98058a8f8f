#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "prelabel/geometry.hpp"

namespace prelabel {

/// Row-major binary raster. Pixel (x, y) covers [x, x+1) x [y, y+1).
class BinaryMask {
 public:
  BinaryMask(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool v = true) { bits_[index(x, y)] = v ? 1 : 0; }
  /// Out-of-range reads are background.
  bool get_or_background(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_ && at(x, y);
  }
  std::size_t count() const;
  bool empty() const { return count() == 0; }
  /// Sets every pixel whose center lies inside `box`.
  void fill_box(const BBox& box);

  const std::vector<std::uint8_t>& bits() const { return bits_; }
  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> bits_;
};

/// Square structuring element of side `size` (odd). Outside the raster counts
/// as background for dilation and as foreground for erosion, so closing never
/// eats foreground at the border.
BinaryMask dilate(const BinaryMask& mask, int size);
BinaryMask erode(const BinaryMask& mask, int size);

inline constexpr int kMaxClosingIterations = 10;

/// Iterative closing with kernels 3, 5, 7, ... until no enclosed hole is
/// left or `max_iterations` passes have run. A single 3x3 pass cannot fill
/// a 3x3 hole, so "no change" is not a stopping signal.
BinaryMask close_mask(const BinaryMask& mask, int max_iterations = kMaxClosingIterations);

/// Labels 8-connected foreground components; 0 is background, labels from 1.
std::vector<int> label_components(const BinaryMask& mask, int* count = nullptr);

/// Background regions (4-connected) that do not reach the raster edge.
int count_holes(const BinaryMask& mask);

/// Outer boundary of the component containing (x, y), traced along pixel
/// edges, clockwise on screen. Only direction changes are emitted.
Polygon trace_outer_contour(const BinaryMask& mask, int x, int y);

inline constexpr double kContourEpsilonScale = 0.002;

/// One simplified outer contour per 8-connected component, raster order of
/// each component's first pixel.
std::vector<Polygon> mask_to_polygons(const BinaryMask& mask, std::size_t min_points = 3);

enum class EncapsulationMode { axis_aligned, oriented };

std::variant<BBox, OrientedBox> encapsulate(const Polygon& poly, EncapsulationMode mode);

}  // namespace prelabel
