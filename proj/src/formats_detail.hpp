#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prelabel/formats.hpp"
#include "prelabel/store.hpp"

namespace prelabel::detail {

struct ExportAnnotation {
  std::string class_name;
  Geometry geometry;
  std::optional<double> detector_score;
  std::optional<double> verified_score;
  AnnotationSource source = AnnotationSource::manual;
};

struct ExportImage {
  ImageRecord record;
  std::vector<ExportAnnotation> annotations;
};

struct ExportContext {
  Project project;
  /// Sorted by name; position is the exported class index.
  std::vector<std::string> class_names;
  /// Sorted by file name, annotations in store order.
  std::vector<ExportImage> images;

  std::size_t class_index(const std::string& name) const;
};

ExportContext build_export_context(const Store& store, std::int64_t project_id,
                                   const ExportOptions& options);

/// Collects matched items per image and writes them in one upsert each.
class ImportSession {
 public:
  ImportSession(Store& store, std::int64_t project_id);

  ProjectMode mode() const { return mode_; }
  std::optional<ImageRecord> match_image(const std::string& name);
  std::int64_t class_id(const std::string& name);
  void add(const ImageRecord& image, std::string item, NewAnnotation annotation);
  void skip(std::string item, std::string reason);
  ImportReport finish();

 private:
  struct Pending {
    std::string item;
    NewAnnotation annotation;
  };

  Store& store_;
  std::int64_t project_id_;
  ProjectMode mode_;
  std::map<std::string, std::optional<ImageRecord>> image_cache_;
  std::map<std::string, std::int64_t> class_cache_;
  std::map<std::int64_t, std::pair<ImageRecord, std::vector<Pending>>> pending_;
  ImportReport report_;
};

std::string export_coco(const ExportContext& ctx);
void import_coco(ImportSession& session, const FileMap& files);
void validate_coco(const FileMap& files, std::vector<Diagnostic>& out);

FileMap export_yolo(const ExportContext& ctx);
void import_yolo(ImportSession& session, const FileMap& files);
void validate_yolo(const FileMap& files, std::vector<Diagnostic>& out);

FileMap export_voc(const ExportContext& ctx);
void import_voc(ImportSession& session, const FileMap& files);
void validate_voc(const FileMap& files, std::vector<Diagnostic>& out);

std::string export_csv(const ExportContext& ctx);
void import_csv(ImportSession& session, const FileMap& files);
void validate_csv(const FileMap& files, std::vector<Diagnostic>& out);

bool has_suffix(const std::string& name, std::string_view suffix);
/// Whitespace-separated numbers; nullopt if any token is not a number.
std::optional<std::vector<double>> parse_numbers(std::string_view text, char sep = ' ');
std::vector<std::string> lines_of(std::string_view text);

}  // namespace prelabel::detail
