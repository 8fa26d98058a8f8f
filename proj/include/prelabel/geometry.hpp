#pragma once

#include <array>
#include <span>
#include <variant>
#include <vector>

namespace prelabel {

struct Point {
  double x = 0;
  double y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Axis-aligned box in pixel coordinates; origin top-left, y down.
struct BBox {
  double x1 = 0;
  double y1 = 0;
  double x2 = 0;
  double y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  bool valid() const;
  bool contains(const BBox& other) const;
  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Rotated rectangle. Canonical form: w >= h and theta in [-pi/2, pi/2);
/// squares take the theta closest to zero.
struct OrientedBox {
  double cx = 0;
  double cy = 0;
  double w = 0;
  double h = 0;
  double theta = 0;

  double area() const { return w * h; }
  /// Corners in clockwise screen order (y down), starting at the
  /// (-w/2, -h/2) corner of the local frame.
  std::array<Point, 4> corners() const;
  bool valid() const;
  friend bool operator==(const OrientedBox&, const OrientedBox&) = default;
};

/// Implicitly closed ring; the first point is not repeated at the end.
struct Polygon {
  std::vector<Point> points;

  bool valid() const;
  friend bool operator==(const Polygon&, const Polygon&) = default;
};

using Geometry = std::variant<BBox, OrientedBox, Polygon>;

double iou(const BBox& a, const BBox& b);

/// Component-wise envelope. Throws std::invalid_argument on an empty list.
BBox union_box(std::span<const BBox> boxes);

BBox bounding_box(std::span<const Point> points);

/// Brings (w, h, theta) into canonical form without changing the rectangle.
OrientedBox canonicalize(OrientedBox box);

/// Minimum-area enclosing rectangle via rotating calipers over the convex
/// hull. Collinear input gives a zero-height box along the segment.
OrientedBox min_area_obb(std::span<const Point> points);

std::vector<Point> convex_hull(std::span<const Point> points);

double polygon_perimeter(const Polygon& poly);
double polygon_area(const Polygon& poly);

/// Distance from p to the closed segment [a, b].
double point_segment_distance(Point p, Point a, Point b);

/// Ramer-Douglas-Peucker on a closed ring. A point is dropped when its
/// distance to the simplified chain is <= epsilon. Never returns fewer than
/// three points.
Polygon rdp_simplify(const Polygon& poly, double epsilon);

/// Tight axis-aligned box of any geometry.
BBox envelope(const Geometry& g);

}  // namespace prelabel
