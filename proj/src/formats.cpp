#include "prelabel/formats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <nlohmann/json.hpp>

#include "formats_detail.hpp"
#include "prelabel/errors.hpp"
#include "prelabel/text.hpp"

namespace prelabel {

std::string_view to_string(ExportFormat f) {
  switch (f) {
    case ExportFormat::coco: return "coco";
    case ExportFormat::yolo: return "yolo";
    case ExportFormat::voc: return "voc";
    case ExportFormat::csv: return "csv";
  }
  return "?";
}

ExportFormat parse_export_format(std::string_view s) {
  const std::string l = to_lower(s);
  if (l == "coco") return ExportFormat::coco;
  if (l == "yolo") return ExportFormat::yolo;
  if (l == "voc") return ExportFormat::voc;
  if (l == "csv") return ExportFormat::csv;
  throw InputError("unknown format '" + std::string(s) + "' (expected coco, yolo, voc or csv)");
}

std::string format_double(double v) {
  if (v == 0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void check_export_supported(ProjectMode mode, ExportFormat format, GeometryPolicy policy) {
  if (policy == GeometryPolicy::boxes_only || mode == ProjectMode::detection) return;
  const bool ok = format == ExportFormat::csv || format == ExportFormat::yolo ||
                  (mode == ProjectMode::segmentation && format == ExportFormat::coco);
  if (!ok) {
    throw InputError("unsupported (mode, format) pair: (" + std::string(to_string(mode)) + ", " +
                     std::string(to_string(format)) + "); use the boxes-only geometry policy");
  }
}

namespace detail {

bool has_suffix(const std::string& name, std::string_view suffix) {
  return to_lower(name).ends_with(suffix);
}

std::optional<std::vector<double>> parse_numbers(std::string_view text, char sep) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && (text[pos] == sep || text[pos] == ' ' || text[pos] == '\t' ||
                                 text[pos] == '\r')) {
      ++pos;
    }
    if (pos >= text.size()) break;
    std::size_t end = pos;
    while (end < text.size() && text[end] != sep && text[end] != ' ' && text[end] != '\t' &&
           text[end] != '\r') {
      ++end;
    }
    double v = 0;
    const auto res = std::from_chars(text.data() + pos, text.data() + end, v);
    if (res.ec != std::errc() || res.ptr != text.data() + end || !std::isfinite(v)) {
      return std::nullopt;
    }
    out.push_back(v);
    pos = end;
  }
  return out;
}

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out = split(text, '\n');
  for (auto& l : out) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
  }
  if (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

std::size_t ExportContext::class_index(const std::string& name) const {
  return static_cast<std::size_t>(
      std::lower_bound(class_names.begin(), class_names.end(), name) - class_names.begin());
}

ExportContext build_export_context(const Store& store, std::int64_t project_id,
                                   const ExportOptions& options) {
  ExportContext ctx;
  ctx.project = store.project(project_id);
  std::map<std::int64_t, std::string> names;
  for (const auto& c : store.classes(project_id)) {
    names[c.id] = c.name;
    ctx.class_names.push_back(c.name);
  }
  std::sort(ctx.class_names.begin(), ctx.class_names.end());
  auto images = store.images(project_id);
  std::stable_sort(images.begin(), images.end(), [](const ImageRecord& a, const ImageRecord& b) {
    return a.file_name < b.file_name;
  });
  for (auto& rec : images) {
    ExportImage img{rec, {}};
    for (const auto& a : store.annotations(rec.id)) {
      if (a.state == AnnotationState::pending && !options.include_pending) continue;
      Geometry g = a.geometry;
      if (options.policy == GeometryPolicy::boxes_only) g = envelope(g);
      img.annotations.push_back(
          {names.at(a.class_id), std::move(g), a.detector_score, a.verified_score, a.source});
    }
    ctx.images.push_back(std::move(img));
  }
  return ctx;
}

ImportSession::ImportSession(Store& store, std::int64_t project_id)
    : store_(store), project_id_(project_id), mode_(store.project(project_id).mode) {
  for (const auto& c : store.classes(project_id)) class_cache_[c.name] = c.id;
}

std::optional<ImageRecord> ImportSession::match_image(const std::string& name) {
  const std::string stem = to_lower(file_stem(name));
  auto it = image_cache_.find(stem);
  if (it == image_cache_.end()) {
    it = image_cache_.emplace(stem, store_.find_image_by_stem(project_id_, stem)).first;
  }
  return it->second;
}

std::int64_t ImportSession::class_id(const std::string& name) {
  const std::string n = normalize_label(name);
  if (n.empty()) throw InputError("empty class name");
  if (auto it = class_cache_.find(n); it != class_cache_.end()) return it->second;
  bool created = false;
  const LabelClass c = store_.ensure_class(project_id_, n, &created);
  if (created) report_.created_classes.push_back(c.name);
  class_cache_[n] = c.id;
  return c.id;
}

void ImportSession::add(const ImageRecord& image, std::string item, NewAnnotation annotation) {
  auto& slot = pending_[image.id];
  slot.first = image;
  slot.second.push_back({std::move(item), std::move(annotation)});
}

void ImportSession::skip(std::string item, std::string reason) {
  report_.skipped.push_back({std::move(item), std::move(reason)});
}

namespace {

bool same_annotation(std::int64_t class_a, const Geometry& a, std::int64_t class_b,
                     const Geometry& b) {
  if (class_a != class_b || a.index() != b.index()) return false;
  const auto ca = geometry_coords(a);
  const auto cb = geometry_coords(b);
  if (ca.size() != cb.size()) return false;
  for (std::size_t i = 0; i < ca.size(); ++i) {
    if (std::abs(ca[i] - cb[i]) > 1e-6) return false;
  }
  return true;
}

}  // namespace

ImportReport ImportSession::finish() {
  for (auto& [image_id, entry] : pending_) {
    auto& [image, items] = entry;
    const auto existing = store_.annotations(image_id);
    std::vector<NewAnnotation> batch;
    for (const auto& p : items) {
      const bool dup =
          std::any_of(existing.begin(), existing.end(), [&](const Annotation& e) {
            return same_annotation(e.class_id, e.geometry, p.annotation.class_id,
                                   p.annotation.geometry);
          }) ||
          std::any_of(batch.begin(), batch.end(), [&](const NewAnnotation& e) {
            return same_annotation(e.class_id, e.geometry, p.annotation.class_id,
                                   p.annotation.geometry);
          });
      if (dup) report_.warnings.push_back(p.item + ": exact duplicate of an existing annotation");
      batch.push_back(p.annotation);
    }
    const UpsertResult r = store_.upsert_annotations(image_id, batch, {});
    for (const auto& rej : r.rejected) skip(items[rej.index].item, rej.reason);
    report_.imported += r.inserted;
    ++report_.matched_images;
  }
  pending_.clear();
  return report_;
}

}  // namespace detail

ExportBundle export_project(const Store& store, std::int64_t project_id, ExportFormat format,
                            const ExportOptions& options) {
  const Project p = store.project(project_id);
  check_export_supported(p.mode, format, options.policy);
  const detail::ExportContext ctx = detail::build_export_context(store, project_id, options);
  ExportBundle bundle{format, {}};
  switch (format) {
    case ExportFormat::coco: bundle.files["annotations.json"] = detail::export_coco(ctx); break;
    case ExportFormat::yolo: bundle.files = detail::export_yolo(ctx); break;
    case ExportFormat::voc: bundle.files = detail::export_voc(ctx); break;
    case ExportFormat::csv: bundle.files["annotations.csv"] = detail::export_csv(ctx); break;
  }
  return bundle;
}

ImportReport import_annotations(Store& store, std::int64_t project_id, ExportFormat format,
                                const FileMap& files) {
  detail::ImportSession session(store, project_id);
  switch (format) {
    case ExportFormat::coco: detail::import_coco(session, files); break;
    case ExportFormat::yolo: detail::import_yolo(session, files); break;
    case ExportFormat::voc: detail::import_voc(session, files); break;
    case ExportFormat::csv: detail::import_csv(session, files); break;
  }
  return session.finish();
}

std::vector<Diagnostic> validate_bundle(ExportFormat format, const FileMap& files) {
  std::vector<Diagnostic> out;
  switch (format) {
    case ExportFormat::coco: detail::validate_coco(files, out); break;
    case ExportFormat::yolo: detail::validate_yolo(files, out); break;
    case ExportFormat::voc: detail::validate_voc(files, out); break;
    case ExportFormat::csv: detail::validate_csv(files, out); break;
  }
  return out;
}

nlohmann::json to_json(const ImportReport& r) {
  nlohmann::json skipped = nlohmann::json::array();
  for (const auto& s : r.skipped) skipped.push_back({{"item", s.item}, {"reason", s.reason}});
  return {{"matched_images", r.matched_images},
          {"imported", r.imported},
          {"created_classes", r.created_classes},
          {"skipped", skipped},
          {"warnings", r.warnings}};
}

nlohmann::json to_json(const std::vector<Diagnostic>& d) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& x : d) {
    out.push_back({{"file", x.file}, {"location", x.location}, {"message", x.message}});
  }
  return out;
}

}  // namespace prelabel
