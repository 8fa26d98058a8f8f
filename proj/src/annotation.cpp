#include "prelabel/annotation.hpp"

#include <array>
#include <utility>

#include "prelabel/errors.hpp"

namespace prelabel {
namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::pair<E, std::string_view>, N>& table,
             std::string_view what) {
  for (const auto& [value, name] : table) {
    if (name == s) return value;
  }
  throw InputError("unknown " + std::string(what) + " '" + std::string(s) + "'");
}

template <typename E, std::size_t N>
std::string_view enum_name(E v, const std::array<std::pair<E, std::string_view>, N>& table) {
  for (const auto& [value, name] : table) {
    if (value == v) return name;
  }
  return "?";
}

constexpr std::array<std::pair<ProjectMode, std::string_view>, 3> kModes{{
    {ProjectMode::detection, "detection"},
    {ProjectMode::obb, "obb"},
    {ProjectMode::segmentation, "segmentation"},
}};
constexpr std::array<std::pair<AnnotationSource, std::string_view>, 4> kSources{{
    {AnnotationSource::auto_, "auto"},
    {AnnotationSource::auto_verified, "auto_verified"},
    {AnnotationSource::assisted, "assisted"},
    {AnnotationSource::manual, "manual"},
}};
constexpr std::array<std::pair<AnnotationState, std::string_view>, 2> kStates{{
    {AnnotationState::pending, "pending"},
    {AnnotationState::accepted, "accepted"},
}};
constexpr std::array<std::pair<ImageStatus, std::string_view>, 4> kStatuses{{
    {ImageStatus::unannotated, "unannotated"},
    {ImageStatus::pending_review, "pending_review"},
    {ImageStatus::annotated, "annotated"},
    {ImageStatus::failed, "failed"},
}};
constexpr std::array<std::pair<GeometryKind, std::string_view>, 3> kKinds{{
    {GeometryKind::bbox, "bbox"},
    {GeometryKind::obb, "obb"},
    {GeometryKind::polygon, "polygon"},
}};

}  // namespace

std::string_view to_string(ProjectMode m) { return enum_name(m, kModes); }
std::string_view to_string(AnnotationSource s) { return enum_name(s, kSources); }
std::string_view to_string(AnnotationState s) { return enum_name(s, kStates); }
std::string_view to_string(ImageStatus s) { return enum_name(s, kStatuses); }
std::string_view to_string(GeometryKind k) { return enum_name(k, kKinds); }

ProjectMode parse_project_mode(std::string_view s) { return parse_enum(s, kModes, "mode"); }
AnnotationSource parse_source(std::string_view s) { return parse_enum(s, kSources, "source"); }
AnnotationState parse_state(std::string_view s) { return parse_enum(s, kStates, "state"); }
ImageStatus parse_image_status(std::string_view s) {
  return parse_enum(s, kStatuses, "image status");
}
GeometryKind parse_geometry_kind(std::string_view s) {
  return parse_enum(s, kKinds, "geometry kind");
}

GeometryKind kind_of(const Geometry& g) {
  switch (g.index()) {
    case 0: return GeometryKind::bbox;
    case 1: return GeometryKind::obb;
    default: return GeometryKind::polygon;
  }
}

bool kind_allowed(ProjectMode mode, GeometryKind kind) {
  if (kind == GeometryKind::bbox) return true;
  switch (mode) {
    case ProjectMode::detection: return false;
    case ProjectMode::obb: return kind == GeometryKind::obb;
    case ProjectMode::segmentation: return kind == GeometryKind::polygon;
  }
  return false;
}

std::vector<double> geometry_coords(const Geometry& g) {
  if (const auto* b = std::get_if<BBox>(&g)) return {b->x1, b->y1, b->x2, b->y2};
  if (const auto* o = std::get_if<OrientedBox>(&g)) return {o->cx, o->cy, o->w, o->h, o->theta};
  std::vector<double> out;
  for (const Point& p : std::get<Polygon>(g).points) {
    out.push_back(p.x);
    out.push_back(p.y);
  }
  return out;
}

Geometry geometry_from_coords(GeometryKind kind, std::span<const double> c) {
  switch (kind) {
    case GeometryKind::bbox:
      if (c.size() != 4) throw InputError("bbox needs 4 numbers");
      return BBox{c[0], c[1], c[2], c[3]};
    case GeometryKind::obb:
      if (c.size() != 5) throw InputError("obb needs 5 numbers");
      return OrientedBox{c[0], c[1], c[2], c[3], c[4]};
    case GeometryKind::polygon: {
      if (c.size() < 6 || c.size() % 2 != 0) {
        throw InputError("polygon needs an even count of at least 6 numbers");
      }
      Polygon p;
      for (std::size_t i = 0; i < c.size(); i += 2) p.points.push_back({c[i], c[i + 1]});
      return p;
    }
  }
  throw InputError("unknown geometry kind");
}

}  // namespace prelabel
