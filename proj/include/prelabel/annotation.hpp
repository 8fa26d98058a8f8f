#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prelabel/geometry.hpp"

namespace prelabel {

enum class ProjectMode { detection, obb, segmentation };
enum class AnnotationSource { auto_, auto_verified, assisted, manual };
enum class AnnotationState { pending, accepted };
enum class ImageStatus { unannotated, pending_review, annotated, failed };
enum class GeometryKind { bbox, obb, polygon };

std::string_view to_string(ProjectMode m);
std::string_view to_string(AnnotationSource s);
std::string_view to_string(AnnotationState s);
std::string_view to_string(ImageStatus s);
std::string_view to_string(GeometryKind k);

/// Parsers throw InputError naming the rejected value.
ProjectMode parse_project_mode(std::string_view s);
AnnotationSource parse_source(std::string_view s);
AnnotationState parse_state(std::string_view s);
ImageStatus parse_image_status(std::string_view s);
GeometryKind parse_geometry_kind(std::string_view s);

GeometryKind kind_of(const Geometry& g);
bool kind_allowed(ProjectMode mode, GeometryKind kind);

/// Flat number list: bbox x1 y1 x2 y2; obb cx cy w h theta; polygon x y pairs.
std::vector<double> geometry_coords(const Geometry& g);
/// Inverse of geometry_coords. Throws InputError on a wrong count.
Geometry geometry_from_coords(GeometryKind kind, std::span<const double> coords);

/// Annotation not yet persisted.
struct NewAnnotation {
  std::int64_t class_id = 0;
  Geometry geometry;
  std::optional<double> detector_score;
  std::optional<double> verified_score;
  AnnotationSource source = AnnotationSource::manual;
  AnnotationState state = AnnotationState::accepted;
};

struct Annotation {
  std::int64_t id = 0;
  std::int64_t image_id = 0;
  std::int64_t class_id = 0;
  Geometry geometry;
  std::optional<double> detector_score;
  std::optional<double> verified_score;
  AnnotationSource source = AnnotationSource::manual;
  AnnotationState state = AnnotationState::accepted;
};

}  // namespace prelabel
