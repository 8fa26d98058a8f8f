#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "formats_detail.hpp"
#include "prelabel/errors.hpp"

namespace prelabel::detail {

namespace {

using nlohmann::json;

const std::string* find_coco_file(const FileMap& files) {
  if (auto it = files.find("annotations.json"); it != files.end()) return &it->second;
  for (const auto& [name, body] : files) {
    if (has_suffix(name, ".json")) return &body;
  }
  return nullptr;
}

json parse_json(const std::string& file, const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw ParseError(file + ": byte " + std::to_string(e.byte), "invalid JSON");
  }
}

double number_at(const json& arr, std::size_t i, const std::string& where) {
  if (!arr.is_array() || i >= arr.size() || !arr[i].is_number()) {
    throw ParseError(where, "expected a number list");
  }
  return arr[i].get<double>();
}

}  // namespace

std::string export_coco(const ExportContext& ctx) {
  json images = json::array();
  json annotations = json::array();
  json categories = json::array();
  for (std::size_t i = 0; i < ctx.class_names.size(); ++i) {
    categories.push_back({{"id", i + 1}, {"name", ctx.class_names[i]}});
  }
  std::int64_t image_id = 0;
  std::int64_t ann_id = 0;
  for (const auto& img : ctx.images) {
    ++image_id;
    images.push_back({{"id", image_id},
                      {"file_name", img.record.file_name},
                      {"width", img.record.width},
                      {"height", img.record.height}});
    for (const auto& a : img.annotations) {
      const BBox b = envelope(a.geometry);
      json entry = {{"id", ++ann_id},
                    {"image_id", image_id},
                    {"category_id", ctx.class_index(a.class_name) + 1},
                    {"bbox", {b.x1, b.y1, b.width(), b.height()}},
                    {"area", b.area()},
                    {"iscrowd", 0}};
      if (const auto* poly = std::get_if<Polygon>(&a.geometry)) {
        json ring = json::array();
        for (const auto& p : poly->points) {
          ring.push_back(p.x);
          ring.push_back(p.y);
        }
        entry["segmentation"] = json::array({ring});
        entry["area"] = std::abs(polygon_area(*poly));
      }
      if (a.detector_score) entry["score"] = *a.detector_score;
      annotations.push_back(std::move(entry));
    }
  }
  json doc = {{"images", images}, {"annotations", annotations}, {"categories", categories}};
  return doc.dump(2) + "\n";
}

static void import_coco_document(ImportSession& session, const FileMap& files) {
  const std::string* body = find_coco_file(files);
  if (!body) throw ParseError("bundle", "no COCO JSON file");
  const json doc = parse_json("annotations.json", *body);
  if (!doc.is_object() || !doc.contains("images") || !doc.contains("annotations")) {
    throw ParseError("annotations.json", "missing images or annotations array");
  }
  std::map<std::int64_t, std::string> category_names;
  for (const auto& c : doc.value("categories", json::array())) {
    const std::string name = c.at("name").get<std::string>();
    category_names[c.at("id").get<std::int64_t>()] = name;
    session.class_id(name);
  }
  std::map<std::int64_t, std::string> image_names;
  for (const auto& im : doc["images"]) {
    image_names[im.at("id").get<std::int64_t>()] = im.at("file_name").get<std::string>();
  }
  std::size_t index = 0;
  for (const auto& a : doc["annotations"]) {
    const std::string where = "annotations.json: annotations[" + std::to_string(index++) + "]";
    const auto img_it = image_names.find(a.value("image_id", std::int64_t{-1}));
    if (img_it == image_names.end()) {
      session.skip(where, "unknown image id");
      continue;
    }
    const auto cat_it = category_names.find(a.value("category_id", std::int64_t{-1}));
    if (cat_it == category_names.end()) {
      session.skip(where, "unknown category id");
      continue;
    }
    const auto image = session.match_image(img_it->second);
    if (!image) {
      session.skip(where, "no image matching '" + img_it->second + "'");
      continue;
    }
    NewAnnotation ann;
    ann.class_id = session.class_id(cat_it->second);
    const json seg = a.value("segmentation", json());
    if (session.mode() == ProjectMode::segmentation && seg.is_array() && !seg.empty() &&
        seg[0].is_array() && seg[0].size() >= 6) {
      Polygon poly;
      const json& ring = seg[0];
      for (std::size_t i = 0; i + 1 < ring.size(); i += 2) {
        poly.points.push_back({number_at(ring, i, where), number_at(ring, i + 1, where)});
      }
      ann.geometry = std::move(poly);
    } else {
      const json bbox = a.value("bbox", json());
      if (!bbox.is_array() || bbox.size() != 4) throw ParseError(where, "bbox must have 4 numbers");
      const double x = number_at(bbox, 0, where);
      const double y = number_at(bbox, 1, where);
      ann.geometry = BBox{x, y, x + number_at(bbox, 2, where), y + number_at(bbox, 3, where)};
    }
    session.add(*image, where, std::move(ann));
  }
}

void import_coco(ImportSession& session, const FileMap& files) {
  try {
    import_coco_document(session, files);
  } catch (const json::exception& e) {
    throw ParseError("annotations.json", std::string("unexpected structure: ") + e.what());
  }
}

static void validate_coco_document(const FileMap& files, std::vector<Diagnostic>& out) {
  const std::string* body = find_coco_file(files);
  if (!body) {
    out.push_back({"", "", "missing COCO JSON file"});
    return;
  }
  const std::string file = "annotations.json";
  json doc;
  try {
    doc = json::parse(*body);
  } catch (const json::parse_error& e) {
    out.push_back({file, "byte " + std::to_string(e.byte), "invalid JSON"});
    return;
  }
  for (const char* key : {"images", "annotations", "categories"}) {
    if (!doc.is_object() || !doc.contains(key) || !doc[key].is_array()) {
      out.push_back({file, "", std::string("missing ") + key + " array"});
    }
  }
  if (!out.empty()) return;
  std::map<std::int64_t, std::pair<double, double>> sizes;
  std::set<std::string> seen_files;
  for (std::size_t i = 0; i < doc["images"].size(); ++i) {
    const auto& im = doc["images"][i];
    const std::string loc = "images[" + std::to_string(i) + "]";
    if (!im.contains("id") || !im.contains("file_name")) {
      out.push_back({file, loc, "image needs id and file_name"});
      continue;
    }
    if (!seen_files.insert(im["file_name"].dump()).second) {
      out.push_back({file, loc, "image listed more than once"});
    }
    sizes[im["id"].get<std::int64_t>()] = {im.value("width", 0.0), im.value("height", 0.0)};
  }
  std::set<std::int64_t> cats;
  for (const auto& c : doc["categories"]) {
    if (c.contains("id") && c["id"].is_number_integer()) cats.insert(c["id"].get<std::int64_t>());
  }
  for (std::size_t i = 0; i < doc["annotations"].size(); ++i) {
    const auto& a = doc["annotations"][i];
    const std::string loc = "annotations[" + std::to_string(i) + "]";
    if (!a.contains("image_id") || !sizes.count(a["image_id"].get<std::int64_t>())) {
      out.push_back({file, loc, "unknown image id"});
    }
    if (!a.contains("category_id") || !cats.count(a["category_id"].get<std::int64_t>())) {
      out.push_back({file, loc, "unknown category id"});
    }
    const json bbox = a.value("bbox", json());
    if (!bbox.is_array() || bbox.size() != 4 ||
        !std::all_of(bbox.begin(), bbox.end(), [](const json& v) { return v.is_number(); })) {
      out.push_back({file, loc, "bbox must have 4 numbers"});
      continue;
    }
    const double x = bbox[0], y = bbox[1], w = bbox[2], h = bbox[3];
    if (x < 0 || y < 0) out.push_back({file, loc, "negative coordinates"});
    if (w <= 0 || h <= 0) out.push_back({file, loc, "degenerate box"});
  }
}

void validate_coco(const FileMap& files, std::vector<Diagnostic>& out) {
  try {
    validate_coco_document(files, out);
  } catch (const json::exception& e) {
    out.push_back({"annotations.json", "", std::string("unexpected structure: ") + e.what()});
  }
}

}  // namespace prelabel::detail
