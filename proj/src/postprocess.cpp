#include "prelabel/postprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>

#include "prelabel/errors.hpp"

namespace prelabel {

BinaryMask::BinaryMask(int width, int height) : width_(width), height_(height) {
  if (width < 1 || height < 1) throw InputError("mask dimensions must be >= 1");
  bits_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

void BinaryMask::fill_box(const BBox& box) {
  const int x0 = std::max(0, static_cast<int>(std::ceil(box.x1 - 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(box.y1 - 0.5)));
  const int x1 = std::min(width_, static_cast<int>(std::ceil(box.x2 - 0.5)));
  const int y1 = std::min(height_, static_cast<int>(std::ceil(box.y2 - 0.5)));
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) set(x, y);
  }
}

namespace {

// One separable pass of a square min/max filter along rows or columns.
// `outside_fg` decides how pixels beyond the raster edge are counted.
BinaryMask filter_pass(const BinaryMask& in, int radius, bool horizontal, bool want_all,
                       bool outside_fg) {
  BinaryMask out(in.width(), in.height());
  const int outer = horizontal ? in.height() : in.width();
  const int inner = horizontal ? in.width() : in.height();
  std::vector<int> prefix(static_cast<std::size_t>(inner) + 1);
  for (int o = 0; o < outer; ++o) {
    for (int i = 0; i < inner; ++i) {
      const bool v = horizontal ? in.at(i, o) : in.at(o, i);
      prefix[i + 1] = prefix[i] + (v ? 1 : 0);
    }
    for (int i = 0; i < inner; ++i) {
      const int lo = i - radius;
      const int hi = i + radius;
      const int clo = std::max(lo, 0);
      const int chi = std::min(hi, inner - 1);
      int fg = prefix[chi + 1] - prefix[clo];
      const int outside = (clo - lo) + (hi - chi);
      if (outside_fg) fg += outside;
      const int window = 2 * radius + 1;
      const bool v = want_all ? fg == window : fg > 0;
      if (v) {
        if (horizontal) {
          out.set(i, o);
        } else {
          out.set(o, i);
        }
      }
    }
  }
  return out;
}

}  // namespace

BinaryMask dilate(const BinaryMask& mask, int size) {
  const int r = size / 2;
  return filter_pass(filter_pass(mask, r, true, false, false), r, false, false, false);
}

BinaryMask erode(const BinaryMask& mask, int size) {
  const int r = size / 2;
  return filter_pass(filter_pass(mask, r, true, true, true), r, false, true, true);
}

BinaryMask close_mask(const BinaryMask& mask, int max_iterations) {
  BinaryMask current = mask;
  for (int it = 0; it < max_iterations; ++it) {
    if (count_holes(current) == 0) break;
    const int kernel = 3 + 2 * it;
    BinaryMask next = erode(dilate(current, kernel), kernel);
    current = std::move(next);
  }
  return current;
}

std::vector<int> label_components(const BinaryMask& mask, int* count) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<int> labels(static_cast<std::size_t>(w) * h, 0);
  int next = 0;
  std::deque<std::pair<int, int>> queue;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y) || labels[y * w + x] != 0) continue;
      ++next;
      labels[y * w + x] = next;
      queue.emplace_back(x, y);
      while (!queue.empty()) {
        const auto [cx, cy] = queue.front();
        queue.pop_front();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx;
            const int ny = cy + dy;
            if (!mask.get_or_background(nx, ny) || labels[ny * w + nx] != 0) continue;
            labels[ny * w + nx] = next;
            queue.emplace_back(nx, ny);
          }
        }
      }
    }
  }
  if (count) *count = next;
  return labels;
}

int count_holes(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(w) * h, 0);
  int holes = 0;
  std::deque<std::pair<int, int>> queue;
  constexpr std::array<std::pair<int, int>, 4> kSteps{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask.at(x, y) || seen[y * w + x]) continue;
      bool touches_edge = false;
      seen[y * w + x] = 1;
      queue.emplace_back(x, y);
      while (!queue.empty()) {
        const auto [cx, cy] = queue.front();
        queue.pop_front();
        if (cx == 0 || cy == 0 || cx == w - 1 || cy == h - 1) touches_edge = true;
        for (const auto& [dx, dy] : kSteps) {
          const int nx = cx + dx;
          const int ny = cy + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          if (mask.at(nx, ny) || seen[ny * w + nx]) continue;
          seen[ny * w + nx] = 1;
          queue.emplace_back(nx, ny);
        }
      }
      if (!touches_edge) ++holes;
    }
  }
  return holes;
}

namespace {

// (px, py) must be the first pixel of its component in raster order; its top
// edge then lies on the outer boundary.
Polygon trace_from_first_pixel(const BinaryMask& mask, int px, int py) {
  // Corner-grid walk with foreground on the right (clockwise on screen).
  // Directions: 0 east, 1 south, 2 west, 3 north.
  constexpr std::array<int, 4> kDx{1, 0, -1, 0};
  constexpr std::array<int, 4> kDy{0, 1, 0, -1};
  auto ahead = [&](int vx, int vy, int d, bool left) {
    switch (d) {
      case 0: return left ? mask.get_or_background(vx, vy - 1) : mask.get_or_background(vx, vy);
      case 1: return left ? mask.get_or_background(vx, vy) : mask.get_or_background(vx - 1, vy);
      case 2:
        return left ? mask.get_or_background(vx - 1, vy)
                    : mask.get_or_background(vx - 1, vy - 1);
      default:
        return left ? mask.get_or_background(vx - 1, vy - 1)
                    : mask.get_or_background(vx, vy - 1);
    }
  };

  Polygon out;
  out.points.push_back({static_cast<double>(px), static_cast<double>(py)});
  int vx = px;
  int vy = py;
  int d = 0;
  const std::size_t limit = 4 * (static_cast<std::size_t>(mask.width()) + 1) *
                            (static_cast<std::size_t>(mask.height()) + 1);
  for (std::size_t step = 0; step < limit; ++step) {
    vx += kDx[d];
    vy += kDy[d];
    int nd;
    if (ahead(vx, vy, d, true)) {
      nd = (d + 3) % 4;
    } else if (ahead(vx, vy, d, false)) {
      nd = d;
    } else {
      nd = (d + 1) % 4;
    }
    if (vx == px && vy == py && nd == 0) break;
    if (nd != d) out.points.push_back({static_cast<double>(vx), static_cast<double>(vy)});
    d = nd;
  }
  return out;
}

}  // namespace

Polygon trace_outer_contour(const BinaryMask& mask, int px, int py) {
  if (!mask.get_or_background(px, py)) throw InputError("trace start is not foreground");
  const std::vector<int> labels = label_components(mask);
  const int label = labels[py * mask.width() + px];
  const auto first = std::find(labels.begin(), labels.end(), label) - labels.begin();
  return trace_from_first_pixel(mask, static_cast<int>(first % mask.width()),
                                static_cast<int>(first / mask.width()));
}

std::vector<Polygon> mask_to_polygons(const BinaryMask& mask, std::size_t min_points) {
  int count = 0;
  const std::vector<int> labels = label_components(mask, &count);
  std::vector<Polygon> out;
  std::vector<bool> done(static_cast<std::size_t>(count) + 1, false);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int label = labels[i];
    if (label == 0 || done[label]) continue;
    done[label] = true;
    const Polygon contour = trace_from_first_pixel(mask, static_cast<int>(i % mask.width()),
                                                   static_cast<int>(i / mask.width()));
    Polygon simplified =
        rdp_simplify(contour, kContourEpsilonScale * polygon_perimeter(contour));
    if (simplified.points.size() >= std::max<std::size_t>(min_points, 3)) {
      out.push_back(std::move(simplified));
    }
  }
  return out;
}

std::variant<BBox, OrientedBox> encapsulate(const Polygon& poly, EncapsulationMode mode) {
  if (mode == EncapsulationMode::axis_aligned) return bounding_box(poly.points);
  return min_area_obb(poly.points);
}

}  // namespace prelabel
