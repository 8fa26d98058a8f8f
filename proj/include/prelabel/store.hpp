#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "prelabel/annotation.hpp"
#include "prelabel/settings.hpp"

namespace prelabel {

inline constexpr int kSchemaVersion = 1;

struct Project {
  std::int64_t id = 0;
  std::string name;
  ProjectMode mode = ProjectMode::detection;
  PipelineSettings settings;
  std::string created_at;
};

struct LabelClass {
  std::int64_t id = 0;
  std::int64_t project_id = 0;
  std::string name;
  std::string display_color;
};

struct ImageRecord {
  std::int64_t id = 0;
  std::int64_t project_id = 0;
  std::string file_name;
  std::string path;
  int width = 0;
  int height = 0;
  ImageStatus status = ImageStatus::unannotated;
  bool preannotated = false;
  bool marked_done = false;
};

struct Rejection {
  std::size_t index = 0;
  std::string reason;
};

struct UpsertResult {
  std::size_t inserted = 0;
  std::size_t replaced = 0;
  std::vector<Rejection> rejected;
};

/// Annotation-count buckets per image: 0-5, 6-10, 11-15, 16-20, 21+.
inline constexpr std::size_t kHistogramBuckets = 5;

struct ProjectStats {
  std::int64_t project_id = 0;
  std::size_t total_images = 0;
  std::size_t processed = 0;
  std::size_t total_annotations = 0;
  std::map<std::string, double> completion;
  std::map<std::string, std::size_t> class_counts;
  std::array<std::size_t, kHistogramBuckets> per_image_histogram{};
};

std::string_view histogram_bucket_label(std::size_t bucket);
std::size_t histogram_bucket(std::size_t annotations);
nlohmann::json to_json(const ProjectStats& stats);

class Database;

/// Embedded persistence. `data_dir/registry.sqlite` holds users, projects
/// and the global image index; each project owns
/// `data_dir/projects/<id>.sqlite` with its classes, images and annotations.
/// Writers to one project are serialized; every public call is atomic.
class Store {
 public:
  explicit Store(std::filesystem::path data_dir);
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  const std::filesystem::path& data_dir() const { return data_dir_; }

  // Projects
  Project create_project(const std::string& name, ProjectMode mode,
                         std::span<const std::string> classes,
                         const PipelineSettings& settings = {});
  Project project(std::int64_t id) const;
  std::optional<Project> find_project(const std::string& name) const;
  std::vector<Project> list_projects(std::size_t offset = 0, std::size_t limit = SIZE_MAX) const;
  void update_settings(std::int64_t project_id, const PipelineSettings& settings);
  void delete_project(std::int64_t id);

  // Classes
  std::vector<LabelClass> classes(std::int64_t project_id) const;
  /// Returns the class with this normalized name, creating it if needed.
  LabelClass ensure_class(std::int64_t project_id, const std::string& name,
                          bool* created = nullptr);

  // Images
  /// Registers an image file; dimensions are read from its header.
  ImageRecord add_image(std::int64_t project_id, const std::filesystem::path& path);
  ImageRecord image(std::int64_t image_id) const;
  std::vector<ImageRecord> images(std::int64_t project_id, std::size_t offset = 0,
                                  std::size_t limit = SIZE_MAX) const;
  std::size_t image_count(std::int64_t project_id) const;
  /// Case-insensitive file-stem lookup.
  std::optional<ImageRecord> find_image_by_stem(std::int64_t project_id,
                                                const std::string& stem) const;
  void set_image_failed(std::int64_t image_id, bool failed);
  void mark_preannotated(std::int64_t image_id);
  void mark_done(std::int64_t image_id, bool done);

  // Annotations
  /// Reasons the annotation would be rejected for this image; empty if valid.
  std::vector<std::string> validate_annotation(const ImageRecord& image,
                                               const NewAnnotation& a) const;
  /// In one transaction: drops the image's annotations whose source is in
  /// `replace_sources`, inserts the valid items and recomputes image status.
  UpsertResult upsert_annotations(std::int64_t image_id, std::span<const NewAnnotation> items,
                                  const std::set<AnnotationSource>& replace_sources);
  std::vector<Annotation> annotations(std::int64_t image_id) const;
  std::size_t delete_annotations(std::int64_t image_id);

  ProjectStats compute_stats(std::int64_t project_id) const;

  // Users
  std::int64_t create_user(const std::string& username, const std::string& password);
  std::optional<std::int64_t> authenticate(const std::string& username,
                                           const std::string& password) const;
  std::size_t user_count() const;

 private:
  struct ProjectHandle;
  ProjectHandle& handle(std::int64_t project_id) const;
  std::int64_t project_of_image(std::int64_t image_id) const;
  void recompute_status(Database& db, std::int64_t image_id) const;

  std::filesystem::path data_dir_;
  std::unique_ptr<Database> registry_;
  mutable std::mutex registry_mutex_;
  mutable std::mutex handles_mutex_;
  mutable std::map<std::int64_t, std::unique_ptr<ProjectHandle>> handles_;
};

}  // namespace prelabel
