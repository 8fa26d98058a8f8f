#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "prelabel/annotation.hpp"

namespace prelabel {

class Store;

enum class ExportFormat { coco, yolo, voc, csv };
enum class GeometryPolicy {
  /// Keep stored geometry; formats that cannot hold it are refused.
  as_stored,
  /// Reduce everything to axis-aligned boxes first.
  boxes_only,
};

std::string_view to_string(ExportFormat f);
ExportFormat parse_export_format(std::string_view s);

/// Relative path -> file contents.
using FileMap = std::map<std::string, std::string>;

struct ExportBundle {
  ExportFormat format = ExportFormat::coco;
  FileMap files;
};

struct ExportOptions {
  GeometryPolicy policy = GeometryPolicy::as_stored;
  bool include_pending = false;
};

/// Throws InputError naming the pair when the project mode cannot be
/// written in `format` under `policy`.
void check_export_supported(ProjectMode mode, ExportFormat format, GeometryPolicy policy);

/// Layouts:
///   coco  annotations.json
///   yolo  data.yaml + labels/<stem>.txt per image
///   voc   Annotations/<stem>.xml per image
///   csv   annotations.csv
/// Output depends only on store contents, so identical stores give
/// byte-identical bundles.
ExportBundle export_project(const Store& store, std::int64_t project_id, ExportFormat format,
                            const ExportOptions& options = {});

struct SkippedItem {
  std::string item;
  std::string reason;
};

struct ImportReport {
  std::size_t matched_images = 0;
  std::size_t imported = 0;
  std::vector<std::string> created_classes;
  std::vector<SkippedItem> skipped;
  std::vector<std::string> warnings;
};

nlohmann::json to_json(const ImportReport& r);

/// Merges annotations into a project. Images are matched by file stem,
/// unknown class names are added to the vocabulary, and nothing already
/// stored is removed. Malformed files raise ParseError with location.
ImportReport import_annotations(Store& store, std::int64_t project_id, ExportFormat format,
                                const FileMap& files);

struct Diagnostic {
  std::string file;
  std::string location;
  std::string message;
};

nlohmann::json to_json(const std::vector<Diagnostic>& d);

/// Structural and semantic checks without touching any project.
std::vector<Diagnostic> validate_bundle(ExportFormat format, const FileMap& files);

/// Zip archive of the bundle (stored entries, fixed timestamps).
std::string write_zip(const FileMap& files);
/// Reads stored or deflated entries. Throws ParseError on a bad archive.
FileMap read_zip(std::string_view bytes);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace prelabel
