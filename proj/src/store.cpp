#include "prelabel/store.hpp"

#include <sodium.h>

#include <algorithm>
#include <chrono>
#include <ctime>

#include <nlohmann/json.hpp>

#include "prelabel/errors.hpp"
#include "prelabel/image.hpp"
#include "prelabel/text.hpp"
#include "sqlite.hpp"

namespace prelabel {

using nlohmann::json;

namespace {

constexpr std::string_view kRegistrySchema = R"sql(
CREATE TABLE users (
  id INTEGER PRIMARY KEY,
  username TEXT NOT NULL UNIQUE,
  password_hash TEXT NOT NULL
);
CREATE TABLE projects (
  id INTEGER PRIMARY KEY,
  name TEXT NOT NULL UNIQUE,
  mode TEXT NOT NULL,
  settings TEXT NOT NULL,
  created_at TEXT NOT NULL,
  db_file TEXT NOT NULL
);
CREATE TABLE image_index (
  id INTEGER PRIMARY KEY,
  project_id INTEGER NOT NULL REFERENCES projects(id) ON DELETE CASCADE
);
)sql";

constexpr std::string_view kProjectSchema = R"sql(
CREATE TABLE classes (
  id INTEGER PRIMARY KEY,
  name TEXT NOT NULL UNIQUE CHECK (length(name) > 0),
  display_color TEXT NOT NULL
);
CREATE TABLE images (
  id INTEGER PRIMARY KEY,
  file_name TEXT NOT NULL,
  path TEXT NOT NULL,
  width INTEGER NOT NULL CHECK (width >= 1),
  height INTEGER NOT NULL CHECK (height >= 1),
  status TEXT NOT NULL,
  failed INTEGER NOT NULL DEFAULT 0,
  preannotated INTEGER NOT NULL DEFAULT 0,
  marked_done INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE annotations (
  id INTEGER PRIMARY KEY,
  image_id INTEGER NOT NULL REFERENCES images(id) ON DELETE CASCADE,
  class_id INTEGER NOT NULL REFERENCES classes(id) ON DELETE CASCADE,
  kind TEXT NOT NULL,
  coords TEXT NOT NULL,
  detector_score REAL,
  verified_score REAL,
  source TEXT NOT NULL,
  state TEXT NOT NULL
);
CREATE INDEX annotations_by_image ON annotations(image_id);
)sql";

constexpr std::array<std::string_view, 10> kDisplayColors{
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

constexpr double kBoundsTolerance = 1e-6;

bool within(const BBox& env, int width, int height) {
  return env.x1 >= -kBoundsTolerance && env.y1 >= -kBoundsTolerance &&
         env.x2 <= width + kBoundsTolerance && env.y2 <= height + kBoundsTolerance;
}

Project read_project(const Statement& q) {
  Project p;
  p.id = q.int64(0);
  p.name = q.text(1);
  p.mode = parse_project_mode(q.text(2));
  p.settings = settings_from_json(json::parse(q.text(3)));
  p.created_at = q.text(4);
  return p;
}

constexpr std::string_view kImageColumns =
    "id, file_name, path, width, height, status, preannotated, marked_done";

ImageRecord read_image(const Statement& q, std::int64_t project_id) {
  ImageRecord r;
  r.id = q.int64(0);
  r.project_id = project_id;
  r.file_name = q.text(1);
  r.path = q.text(2);
  r.width = static_cast<int>(q.int64(3));
  r.height = static_cast<int>(q.int64(4));
  r.status = parse_image_status(q.text(5));
  r.preannotated = q.int64(6) != 0;
  r.marked_done = q.int64(7) != 0;
  return r;
}

}  // namespace

struct Store::ProjectHandle {
  std::int64_t id;
  ProjectMode mode;
  std::mutex mutex;
  Database db;

  ProjectHandle(std::int64_t pid, ProjectMode m, const std::filesystem::path& file)
      : id(pid), mode(m), db(file) {
    db.ensure_schema(kSchemaVersion, kProjectSchema);
  }
};

std::string_view histogram_bucket_label(std::size_t bucket) {
  static constexpr std::array<std::string_view, kHistogramBuckets> kLabels{
      "0-5", "6-10", "11-15", "16-20", "21+"};
  return kLabels.at(bucket);
}

std::size_t histogram_bucket(std::size_t n) {
  if (n <= 5) return 0;
  return std::min<std::size_t>((n - 1) / 5, kHistogramBuckets - 1);
}

json to_json(const ProjectStats& s) {
  json hist = json::array();
  for (std::size_t b = 0; b < kHistogramBuckets; ++b) {
    hist.push_back({{"bucket", histogram_bucket_label(b)}, {"count", s.per_image_histogram[b]}});
  }
  return {{"project_id", s.project_id},
          {"total_images", s.total_images},
          {"processed", s.processed},
          {"total_annotations", s.total_annotations},
          {"completion", s.completion},
          {"class_counts", s.class_counts},
          {"per_image_histogram", hist}};
}

Store::Store(std::filesystem::path data_dir) : data_dir_(std::move(data_dir)) {
  std::filesystem::create_directories(data_dir_ / "projects");
  if (sodium_init() < 0) throw std::runtime_error("libsodium initialization failed");
  registry_ = std::make_unique<Database>(data_dir_ / "registry.sqlite");
  registry_->ensure_schema(kSchemaVersion, kRegistrySchema);
}

Store::~Store() = default;

Store::ProjectHandle& Store::handle(std::int64_t project_id) const {
  std::lock_guard lock(handles_mutex_);
  auto it = handles_.find(project_id);
  if (it != handles_.end()) return *it->second;
  const Project p = project(project_id);
  auto h = std::make_unique<ProjectHandle>(
      project_id, p.mode, data_dir_ / "projects" / (std::to_string(project_id) + ".sqlite"));
  return *handles_.emplace(project_id, std::move(h)).first->second;
}

Project Store::create_project(const std::string& name, ProjectMode mode,
                              std::span<const std::string> classes,
                              const PipelineSettings& settings) {
  settings.validate();
  if (normalize_label(name).empty() || name.find_first_not_of(" \t") == std::string::npos) {
    throw InputError("project name must not be empty");
  }
  std::vector<std::string> names;
  for (const auto& c : classes) {
    std::string n = normalize_label(c);
    if (n.empty()) continue;
    if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(std::move(n));
  }
  if (names.empty()) throw InputError("a project needs at least one class");

  std::int64_t id = 0;
  {
    std::lock_guard lock(registry_mutex_);
    Transaction tx(*registry_);
    auto exists = registry_->prepare("SELECT 1 FROM projects WHERE name = ?");
    exists.bind(1, name);
    if (exists.step()) throw ConflictError("project '" + name + "' already exists");
    registry_->prepare(
        "INSERT INTO projects (name, mode, settings, created_at, db_file) VALUES (?, ?, ?, ?, '')")
        .bind(1, name)
        .bind(2, to_string(mode))
        .bind(3, to_json(settings).dump())
        .bind(4, utc_now())
        .run();
    id = registry_->last_insert_id();
    registry_->prepare("UPDATE projects SET db_file = ? WHERE id = ?")
        .bind(1, "projects/" + std::to_string(id) + ".sqlite")
        .bind(2, id)
        .run();
    tx.commit();
  }
  ProjectHandle& h = handle(id);
  {
    std::lock_guard lock(h.mutex);
    Transaction tx(h.db);
    auto ins = h.db.prepare("INSERT INTO classes (name, display_color) VALUES (?, ?)");
    for (std::size_t i = 0; i < names.size(); ++i) {
      ins.bind(1, names[i]).bind(2, kDisplayColors[i % kDisplayColors.size()]);
      ins.run();
      ins.reset();
    }
    tx.commit();
  }
  return project(id);
}

Project Store::project(std::int64_t id) const {
  std::lock_guard lock(registry_mutex_);
  auto q = registry_->prepare(
      "SELECT id, name, mode, settings, created_at FROM projects WHERE id = ?");
  q.bind(1, id);
  if (!q.step()) throw NotFoundError("project " + std::to_string(id) + " not found");
  return read_project(q);
}

std::optional<Project> Store::find_project(const std::string& name) const {
  std::lock_guard lock(registry_mutex_);
  auto q = registry_->prepare(
      "SELECT id, name, mode, settings, created_at FROM projects WHERE name = ?");
  q.bind(1, name);
  if (!q.step()) return std::nullopt;
  return read_project(q);
}

std::vector<Project> Store::list_projects(std::size_t offset, std::size_t limit) const {
  std::lock_guard lock(registry_mutex_);
  auto q = registry_->prepare(
      "SELECT id, name, mode, settings, created_at FROM projects ORDER BY id LIMIT ? OFFSET ?");
  q.bind(1, static_cast<std::int64_t>(std::min<std::size_t>(limit, INT64_MAX)))
      .bind(2, static_cast<std::int64_t>(offset));
  std::vector<Project> out;
  while (q.step()) out.push_back(read_project(q));
  return out;
}

void Store::update_settings(std::int64_t project_id, const PipelineSettings& settings) {
  settings.validate();
  std::lock_guard lock(registry_mutex_);
  auto q = registry_->prepare("UPDATE projects SET settings = ? WHERE id = ?");
  q.bind(1, to_json(settings).dump()).bind(2, project_id);
  q.run();
  if (registry_->changes() == 0) {
    throw NotFoundError("project " + std::to_string(project_id) + " not found");
  }
}

void Store::delete_project(std::int64_t id) {
  project(id);
  {
    std::lock_guard lock(handles_mutex_);
    handles_.erase(id);
  }
  {
    std::lock_guard lock(registry_mutex_);
    Transaction tx(*registry_);
    registry_->prepare("DELETE FROM projects WHERE id = ?").bind(1, id).run();
    tx.commit();
  }
  const auto base = data_dir_ / "projects" / (std::to_string(id) + ".sqlite");
  for (const char* suffix : {"", "-wal", "-shm"}) {
    std::filesystem::remove(base.string() + suffix);
  }
}

std::vector<LabelClass> Store::classes(std::int64_t project_id) const {
  ProjectHandle& h = handle(project_id);
  std::lock_guard lock(h.mutex);
  auto q = h.db.prepare("SELECT id, name, display_color FROM classes ORDER BY id");
  std::vector<LabelClass> out;
  while (q.step()) out.push_back({q.int64(0), project_id, q.text(1), q.text(2)});
  return out;
}

LabelClass Store::ensure_class(std::int64_t project_id, const std::string& name, bool* created) {
  const std::string n = normalize_label(name);
  if (n.empty()) throw InputError("class name is empty after normalization");
  ProjectHandle& h = handle(project_id);
  std::lock_guard lock(h.mutex);
  auto q = h.db.prepare("SELECT id, display_color FROM classes WHERE name = ?");
  q.bind(1, n);
  if (q.step()) {
    if (created) *created = false;
    return {q.int64(0), project_id, n, q.text(1)};
  }
  auto count = h.db.prepare("SELECT COUNT(*) FROM classes");
  count.step();
  const std::string color = std::string(kDisplayColors[count.int64(0) % kDisplayColors.size()]);
  h.db.prepare("INSERT INTO classes (name, display_color) VALUES (?, ?)")
      .bind(1, n)
      .bind(2, color)
      .run();
  if (created) *created = true;
  return {h.db.last_insert_id(), project_id, n, color};
}

ImageRecord Store::add_image(std::int64_t project_id, const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw InputError("image file does not exist: " + path.string());
  }
  const ImageSize size = probe_image_size(path);
  ProjectHandle& h = handle(project_id);
  std::int64_t id = 0;
  {
    std::lock_guard lock(registry_mutex_);
    registry_->prepare("INSERT INTO image_index (project_id) VALUES (?)")
        .bind(1, project_id)
        .run();
    id = registry_->last_insert_id();
  }
  try {
    std::lock_guard lock(h.mutex);
    h.db.prepare(
            "INSERT INTO images (id, file_name, path, width, height, status) "
            "VALUES (?, ?, ?, ?, ?, 'unannotated')")
        .bind(1, id)
        .bind(2, path.filename().string())
        .bind(3, std::filesystem::absolute(path).string())
        .bind(4, size.width)
        .bind(5, size.height)
        .run();
  } catch (...) {
    std::lock_guard lock(registry_mutex_);
    registry_->prepare("DELETE FROM image_index WHERE id = ?").bind(1, id).run();
    throw;
  }
  return image(id);
}

std::int64_t Store::project_of_image(std::int64_t image_id) const {
  std::lock_guard lock(registry_mutex_);
  auto q = registry_->prepare("SELECT project_id FROM image_index WHERE id = ?");
  q.bind(1, image_id);
  if (!q.step()) throw NotFoundError("image " + std::to_string(image_id) + " not found");
  return q.int64(0);
}

ImageRecord Store::image(std::int64_t image_id) const {
  const std::int64_t pid = project_of_image(image_id);
  ProjectHandle& h = handle(pid);
  std::lock_guard lock(h.mutex);
  auto q = h.db.prepare("SELECT " + std::string(kImageColumns) + " FROM images WHERE id = ?");
  q.bind(1, image_id);
  if (!q.step()) throw NotFoundError("image " + std::to_string(image_id) + " not found");
  return read_image(q, pid);
}

std::vector<ImageRecord> Store::images(std::int64_t project_id, std::size_t offset,
                                       std::size_t limit) const {
  ProjectHandle& h = handle(project_id);
  std::lock_guard lock(h.mutex);
  auto q = h.db.prepare("SELECT " + std::string(kImageColumns) +
                        " FROM images ORDER BY id LIMIT ? OFFSET ?");
  q.bind(1, static_cast<std::int64_t>(std::min<std::size_t>(limit, INT64_MAX)))
      .bind(2, static_cast<std::int64_t>(offset));
  std::vector<ImageRecord> out;
  while (q.step()) out.push_back(read_image(q, project_id));
  return out;
}

std::size_t Store::image_count(std::int64_t project_id) const {
  ProjectHandle& h = handle(project_id);
  std::lock_guard lock(h.mutex);
  auto q = h.db.prepare("SELECT COUNT(*) FROM images");
  q.step();
  return static_cast<std::size_t>(q.int64(0));
}

std::optional<ImageRecord> Store::find_image_by_stem(std::int64_t project_id,
                                                     const std::string& stem) const {
  const std::string wanted = to_lower(file_stem(stem));
  for (const auto& img : images(project_id)) {
    if (to_lower(file_stem(img.file_name)) == wanted) return img;
  }
  return std::nullopt;
}

void Store::recompute_status(Database& db, std::int64_t image_id) const {
  auto q = db.prepare(
      "SELECT i.failed, i.marked_done, "
      "  (SELECT COUNT(*) FROM annotations a WHERE a.image_id = i.id AND a.state = 'accepted'), "
      "  (SELECT COUNT(*) FROM annotations a WHERE a.image_id = i.id AND a.state = 'pending') "
      "FROM images i WHERE i.id = ?");
  q.bind(1, image_id);
  if (!q.step()) return;
  ImageStatus status = ImageStatus::unannotated;
  if (q.int64(1) != 0 || q.int64(2) > 0) {
    status = ImageStatus::annotated;
  } else if (q.int64(3) > 0) {
    status = ImageStatus::pending_review;
  } else if (q.int64(0) != 0) {
    status = ImageStatus::failed;
  }
  db.prepare("UPDATE images SET status = ? WHERE id = ?")
      .bind(1, to_string(status))
      .bind(2, image_id)
      .run();
}

void Store::set_image_failed(std::int64_t image_id, bool failed) {
  ProjectHandle& h = handle(project_of_image(image_id));
  std::lock_guard lock(h.mutex);
  Transaction tx(h.db);
  h.db.prepare("UPDATE images SET failed = ? WHERE id = ?")
      .bind(1, failed ? 1 : 0)
      .bind(2, image_id)
      .run();
  recompute_status(h.db, image_id);
  tx.commit();
}

void Store::mark_preannotated(std::int64_t image_id) {
  ProjectHandle& h = handle(project_of_image(image_id));
  std::lock_guard lock(h.mutex);
  h.db.prepare("UPDATE images SET preannotated = 1 WHERE id = ?").bind(1, image_id).run();
}

void Store::mark_done(std::int64_t image_id, bool done) {
  ProjectHandle& h = handle(project_of_image(image_id));
  std::lock_guard lock(h.mutex);
  Transaction tx(h.db);
  h.db.prepare("UPDATE images SET marked_done = ? WHERE id = ?")
      .bind(1, done ? 1 : 0)
      .bind(2, image_id)
      .run();
  recompute_status(h.db, image_id);
  tx.commit();
}

std::vector<std::string> Store::validate_annotation(const ImageRecord& image,
                                                    const NewAnnotation& a) const {
  std::vector<std::string> errors;
  ProjectHandle& h = handle(image.project_id);
  {
    std::lock_guard lock(h.mutex);
    auto q = h.db.prepare("SELECT 1 FROM classes WHERE id = ?");
    q.bind(1, a.class_id);
    if (!q.step()) errors.push_back("unknown class id " + std::to_string(a.class_id));
  }
  const GeometryKind kind = kind_of(a.geometry);
  if (!kind_allowed(h.mode, kind)) {
    errors.push_back(std::string(to_string(kind)) + " geometry not allowed in " +
                     std::string(to_string(h.mode)) + " projects");
  }
  const bool valid = std::visit([](const auto& g) { return g.valid(); }, a.geometry);
  if (!valid) {
    errors.push_back("invalid " + std::string(to_string(kind)) + " geometry");
  } else if (!within(envelope(a.geometry), image.width, image.height)) {
    errors.push_back("geometry exceeds image bounds");
  }
  for (const auto& [name, score] :
       {std::pair{"detector_score", a.detector_score}, std::pair{"verified_score", a.verified_score}}) {
    if (score && !(*score >= 0 && *score <= 1)) {
      errors.push_back(std::string(name) + " must be in [0, 1]");
    }
  }
  return errors;
}

UpsertResult Store::upsert_annotations(std::int64_t image_id,
                                       std::span<const NewAnnotation> items,
                                       const std::set<AnnotationSource>& replace_sources) {
  const ImageRecord img = image(image_id);
  UpsertResult result;
  std::vector<const NewAnnotation*> accepted;
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto errors = validate_annotation(img, items[i]);
    if (errors.empty()) {
      accepted.push_back(&items[i]);
    } else {
      std::string reason;
      for (const auto& e : errors) reason += (reason.empty() ? "" : "; ") + e;
      result.rejected.push_back({i, std::move(reason)});
    }
  }

  ProjectHandle& h = handle(img.project_id);
  std::lock_guard lock(h.mutex);
  Transaction tx(h.db);
  auto del = h.db.prepare("DELETE FROM annotations WHERE image_id = ? AND source = ?");
  for (const AnnotationSource s : replace_sources) {
    del.bind(1, image_id).bind(2, to_string(s));
    del.run();
    result.replaced += static_cast<std::size_t>(h.db.changes());
    del.reset();
  }
  auto ins = h.db.prepare(
      "INSERT INTO annotations (image_id, class_id, kind, coords, detector_score, "
      "verified_score, source, state) VALUES (?, ?, ?, ?, ?, ?, ?, ?)");
  for (const NewAnnotation* a : accepted) {
    ins.bind(1, image_id)
        .bind(2, a->class_id)
        .bind(3, to_string(kind_of(a->geometry)))
        .bind(4, json(geometry_coords(a->geometry)).dump())
        .bind(5, a->detector_score)
        .bind(6, a->verified_score)
        .bind(7, to_string(a->source))
        .bind(8, to_string(a->state));
    ins.run();
    ins.reset();
    ++result.inserted;
  }
  recompute_status(h.db, image_id);
  tx.commit();
  return result;
}

std::vector<Annotation> Store::annotations(std::int64_t image_id) const {
  const std::int64_t pid = project_of_image(image_id);
  ProjectHandle& h = handle(pid);
  std::lock_guard lock(h.mutex);
  auto q = h.db.prepare(
      "SELECT id, class_id, kind, coords, detector_score, verified_score, source, state "
      "FROM annotations WHERE image_id = ? ORDER BY id");
  q.bind(1, image_id);
  std::vector<Annotation> out;
  while (q.step()) {
    Annotation a;
    a.id = q.int64(0);
    a.image_id = image_id;
    a.class_id = q.int64(1);
    const auto coords = json::parse(q.text(3)).get<std::vector<double>>();
    a.geometry = geometry_from_coords(parse_geometry_kind(q.text(2)), coords);
    a.detector_score = q.optional_real(4);
    a.verified_score = q.optional_real(5);
    a.source = parse_source(q.text(6));
    a.state = parse_state(q.text(7));
    out.push_back(std::move(a));
  }
  return out;
}

std::size_t Store::delete_annotations(std::int64_t image_id) {
  ProjectHandle& h = handle(project_of_image(image_id));
  std::lock_guard lock(h.mutex);
  Transaction tx(h.db);
  h.db.prepare("DELETE FROM annotations WHERE image_id = ?").bind(1, image_id).run();
  const auto n = static_cast<std::size_t>(h.db.changes());
  recompute_status(h.db, image_id);
  tx.commit();
  return n;
}

ProjectStats Store::compute_stats(std::int64_t project_id) const {
  ProjectStats s;
  s.project_id = project_id;
  ProjectHandle& h = handle(project_id);
  std::lock_guard lock(h.mutex);
  // One read transaction so all figures come from the same snapshot.
  h.db.exec("BEGIN");
  try {
    std::map<std::string, std::size_t> by_status;
    for (const auto st : {ImageStatus::unannotated, ImageStatus::pending_review,
                          ImageStatus::annotated, ImageStatus::failed}) {
      by_status[std::string(to_string(st))] = 0;
    }
    auto images = h.db.prepare(
        "SELECT i.status, i.preannotated, "
        "  (SELECT COUNT(*) FROM annotations a WHERE a.image_id = i.id) FROM images i");
    while (images.step()) {
      ++s.total_images;
      ++by_status[images.text(0)];
      if (images.int64(1) != 0) ++s.processed;
      const auto n = static_cast<std::size_t>(images.int64(2));
      ++s.per_image_histogram[histogram_bucket(n)];
    }
    for (const auto& [status, n] : by_status) {
      s.completion[status] =
          s.total_images == 0 ? (status == "unannotated" ? 1.0 : 0.0)
                              : static_cast<double>(n) / static_cast<double>(s.total_images);
    }
    auto classes = h.db.prepare(
        "SELECT c.name, (SELECT COUNT(*) FROM annotations a WHERE a.class_id = c.id) "
        "FROM classes c");
    while (classes.step()) {
      const auto n = static_cast<std::size_t>(classes.int64(1));
      s.class_counts[classes.text(0)] = n;
      s.total_annotations += n;
    }
    h.db.exec("COMMIT");
  } catch (...) {
    h.db.exec("ROLLBACK");
    throw;
  }
  return s;
}

std::int64_t Store::create_user(const std::string& username, const std::string& password) {
  if (username.empty() || password.empty()) throw InputError("username and password required");
  char hash[crypto_pwhash_STRBYTES];
  if (crypto_pwhash_str(hash, password.data(), password.size(),
                        crypto_pwhash_OPSLIMIT_INTERACTIVE,
                        crypto_pwhash_MEMLIMIT_INTERACTIVE) != 0) {
    throw std::runtime_error("password hashing failed");
  }
  std::lock_guard lock(registry_mutex_);
  auto exists = registry_->prepare("SELECT 1 FROM users WHERE username = ?");
  exists.bind(1, username);
  if (exists.step()) throw ConflictError("user '" + username + "' already exists");
  registry_->prepare("INSERT INTO users (username, password_hash) VALUES (?, ?)")
      .bind(1, username)
      .bind(2, std::string_view(hash))
      .run();
  return registry_->last_insert_id();
}

std::optional<std::int64_t> Store::authenticate(const std::string& username,
                                                const std::string& password) const {
  std::int64_t id = 0;
  std::string hash;
  {
    std::lock_guard lock(registry_mutex_);
    auto q = registry_->prepare("SELECT id, password_hash FROM users WHERE username = ?");
    q.bind(1, username);
    if (!q.step()) return std::nullopt;
    id = q.int64(0);
    hash = q.text(1);
  }
  if (crypto_pwhash_str_verify(hash.c_str(), password.data(), password.size()) != 0) {
    return std::nullopt;
  }
  return id;
}

std::size_t Store::user_count() const {
  std::lock_guard lock(registry_mutex_);
  auto q = registry_->prepare("SELECT COUNT(*) FROM users");
  q.step();
  return static_cast<std::size_t>(q.int64(0));
}

}  // namespace prelabel
