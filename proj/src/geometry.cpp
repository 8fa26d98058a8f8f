#include "prelabel/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "prelabel/errors.hpp"

namespace prelabel {
namespace {

constexpr double kPi = std::numbers::pi;

bool finite(double v) { return std::isfinite(v); }

double cross(Point o, Point a, Point b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double dist(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Wraps theta into [-pi/2, pi/2).
double wrap_half_turn(double theta) {
  double t = theta - kPi * std::floor((theta + kPi / 2) / kPi);
  if (t >= kPi / 2) t -= kPi;
  return t;
}

// Wraps theta into [-pi/4, pi/4).
double wrap_quarter_turn(double theta) {
  double t = theta - (kPi / 2) * std::floor((theta + kPi / 4) / (kPi / 2));
  if (t >= kPi / 4) t -= kPi / 2;
  return t;
}

}  // namespace

bool BBox::valid() const {
  return finite(x1) && finite(y1) && finite(x2) && finite(y2) && x1 <= x2 && y1 <= y2;
}

bool BBox::contains(const BBox& o) const {
  return x1 <= o.x1 && y1 <= o.y1 && x2 >= o.x2 && y2 >= o.y2;
}

std::array<Point, 4> OrientedBox::corners() const {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double hw = w / 2;
  const double hh = h / 2;
  const std::array<Point, 4> local{{{-hw, -hh}, {hw, -hh}, {hw, hh}, {-hw, hh}}};
  std::array<Point, 4> out;
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = {cx + local[i].x * c - local[i].y * s, cy + local[i].x * s + local[i].y * c};
  }
  return out;
}

bool OrientedBox::valid() const {
  return finite(cx) && finite(cy) && finite(w) && finite(h) && finite(theta) && w >= 0 &&
         h >= 0 && theta >= -kPi / 2 && theta < kPi / 2;
}

bool Polygon::valid() const {
  if (points.size() < 3) return false;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point& p = points[i];
    if (!finite(p.x) || !finite(p.y)) return false;
    if (p == points[(i + 1) % points.size()]) return false;
  }
  return true;
}

double iou(const BBox& a, const BBox& b) {
  const double iw = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double ih = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

BBox union_box(std::span<const BBox> boxes) {
  if (boxes.empty()) throw std::invalid_argument("union_box: empty box list");
  BBox u = boxes.front();
  for (const BBox& b : boxes.subspan(1)) {
    u.x1 = std::min(u.x1, b.x1);
    u.y1 = std::min(u.y1, b.y1);
    u.x2 = std::max(u.x2, b.x2);
    u.y2 = std::max(u.y2, b.y2);
  }
  return u;
}

BBox bounding_box(std::span<const Point> points) {
  if (points.empty()) throw std::invalid_argument("bounding_box: empty point list");
  BBox b{points[0].x, points[0].y, points[0].x, points[0].y};
  for (const Point& p : points) {
    b.x1 = std::min(b.x1, p.x);
    b.y1 = std::min(b.y1, p.y);
    b.x2 = std::max(b.x2, p.x);
    b.y2 = std::max(b.y2, p.y);
  }
  return b;
}

OrientedBox canonicalize(OrientedBox box) {
  const double scale = std::max({box.w, box.h, 1e-300});
  if (std::abs(box.w - box.h) <= 1e-9 * scale) {
    box.h = box.w = std::max(box.w, box.h);
    box.theta = wrap_quarter_turn(box.theta);
    return box;
  }
  if (box.h > box.w) {
    std::swap(box.w, box.h);
    box.theta += kPi / 2;
  }
  box.theta = wrap_half_turn(box.theta);
  return box;
}

std::vector<Point> convex_hull(std::span<const Point> points) {
  std::vector<Point> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(),
            [](Point a, Point b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;

  std::vector<Point> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Point& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

OrientedBox min_area_obb(std::span<const Point> points) {
  if (points.empty()) throw InputError("min_area_obb: no points");
  const std::vector<Point> hull = convex_hull(points);
  if (hull.size() == 1) return {hull[0].x, hull[0].y, 0, 0, 0};
  if (hull.size() == 2) {
    const Point a = hull[0];
    const Point b = hull[1];
    return canonicalize({(a.x + b.x) / 2, (a.y + b.y) / 2, dist(a, b), 0,
                         std::atan2(b.y - a.y, b.x - a.x)});
  }

  OrientedBox best;
  double best_area = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Point a = hull[i];
    const Point b = hull[(i + 1) % hull.size()];
    const double len = dist(a, b);
    const Point u{(b.x - a.x) / len, (b.y - a.y) / len};
    const Point v{-u.y, u.x};
    double umin = std::numeric_limits<double>::infinity(), umax = -umin;
    double vmin = umin, vmax = -umin;
    for (const Point& p : hull) {
      const double pu = p.x * u.x + p.y * u.y;
      const double pv = p.x * v.x + p.y * v.y;
      umin = std::min(umin, pu);
      umax = std::max(umax, pu);
      vmin = std::min(vmin, pv);
      vmax = std::max(vmax, pv);
    }
    const double area = (umax - umin) * (vmax - vmin);
    if (area < best_area * (1 - 1e-12)) {
      best_area = area;
      const double mu = (umin + umax) / 2;
      const double mv = (vmin + vmax) / 2;
      best = {mu * u.x + mv * v.x, mu * u.y + mv * v.y, umax - umin, vmax - vmin,
              std::atan2(u.y, u.x)};
    }
  }
  return canonicalize(best);
}

double polygon_perimeter(const Polygon& poly) {
  const auto& p = poly.points;
  double total = 0;
  for (std::size_t i = 0; i < p.size(); ++i) total += dist(p[i], p[(i + 1) % p.size()]);
  return total;
}

double polygon_area(const Polygon& poly) {
  const auto& p = poly.points;
  double twice = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Point& a = p[i];
    const Point& b = p[(i + 1) % p.size()];
    twice += a.x * b.y - b.x * a.y;
  }
  return std::abs(twice) / 2;
}

double point_segment_distance(Point p, Point a, Point b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  if (len2 == 0) return dist(p, a);
  const double t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
  return dist(p, {a.x + t * dx, a.y + t * dy});
}

Polygon rdp_simplify(const Polygon& poly, double epsilon) {
  const auto& pts = poly.points;
  const std::size_t n = pts.size();
  if (n <= 3) return poly;

  // Split the ring at point 0 and the point farthest from it; each half is
  // an open chain simplified independently. Index n aliases index 0.
  std::size_t far = 0;
  double far_d = -1;
  for (std::size_t i = 1; i < n; ++i) {
    const double d = dist(pts[0], pts[i]);
    if (d > far_d) {
      far_d = d;
      far = i;
    }
  }

  std::vector<bool> keep(n, false);
  keep[0] = keep[far] = true;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, far}, {far, n}};
  while (!stack.empty()) {
    const auto [lo, hi] = stack.back();
    stack.pop_back();
    if (hi - lo < 2) continue;
    const Point a = pts[lo];
    const Point b = pts[hi % n];
    std::size_t idx = lo;
    double dmax = -1;
    for (std::size_t k = lo + 1; k < hi; ++k) {
      const double d = point_segment_distance(pts[k], a, b);
      if (d > dmax) {
        dmax = d;
        idx = k;
      }
    }
    if (dmax > epsilon) {
      keep[idx] = true;
      stack.emplace_back(lo, idx);
      stack.emplace_back(idx, hi);
    }
  }

  Polygon out;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i]) out.points.push_back(pts[i]);
  }
  if (out.points.size() >= 3) return out;

  // Floor of three points: the two split anchors plus the point deviating
  // most from the segment joining them.
  std::size_t third = 0;
  double third_d = -1;
  for (std::size_t k = 1; k < n; ++k) {
    if (k == far) continue;
    const double d = point_segment_distance(pts[k], pts[0], pts[far]);
    if (d > third_d) {
      third_d = d;
      third = k;
    }
  }
  std::array<std::size_t, 3> idx{0, far, third};
  std::sort(idx.begin(), idx.end());
  return Polygon{{pts[idx[0]], pts[idx[1]], pts[idx[2]]}};
}

BBox envelope(const Geometry& g) {
  return std::visit(
      [](const auto& v) -> BBox {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, BBox>) {
          return v;
        } else if constexpr (std::is_same_v<T, OrientedBox>) {
          const auto c = v.corners();
          return bounding_box(c);
        } else {
          return bounding_box(v.points);
        }
      },
      g);
}

}  // namespace prelabel
