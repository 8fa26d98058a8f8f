#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prelabel/errors.hpp"
#include "prelabel/formats.hpp"
#include "prelabel/image.hpp"
#include "prelabel/store.hpp"
#include "prelabel/text.hpp"
#include "support.hpp"

namespace testing {

inline std::filesystem::path write_blank_image(const std::filesystem::path& path, int w, int h) {
  prelabel::Image img;
  img.width = w;
  img.height = h;
  img.rgb.assign(static_cast<std::size_t>(w) * h * 3, 0);
  prelabel::write_file(path, prelabel::encode_ppm(img));
  return path;
}

struct RandomProject {
  std::int64_t id = 0;
  prelabel::ProjectMode mode = prelabel::ProjectMode::detection;
  std::vector<std::filesystem::path> images;
  std::vector<std::string> classes;
};

inline prelabel::Geometry random_geometry(std::mt19937_64& rng, prelabel::ProjectMode mode, int w,
                                          int h) {
  using namespace prelabel;
  const int pick = uniform_int(rng, 0, 2);
  if (mode == ProjectMode::obb && pick > 0) {
    const double side = std::min(w, h) / 2.0;
    const double bw = uniform(rng, 4, side), bh = uniform(rng, 4, side);
    const double r = std::hypot(bw, bh) / 2 + 0.01;
    OrientedBox o{uniform(rng, r, w - r), uniform(rng, r, h - r), bw, bh,
                  uniform(rng, -std::numbers::pi / 2, std::numbers::pi / 2)};
    return canonicalize(o);
  }
  if (mode == ProjectMode::segmentation && pick > 0) {
    const int n = uniform_int(rng, 3, 12);
    const double rad = uniform(rng, 3, std::min(w, h) / 2.0 - 1);
    const double cx = uniform(rng, rad, w - rad), cy = uniform(rng, rad, h - rad);
    std::vector<double> angles;
    for (int i = 0; i < n; ++i) angles.push_back(uniform(rng, 0, 2 * std::numbers::pi));
    std::sort(angles.begin(), angles.end());
    Polygon p;
    for (double a : angles) {
      const double rr = uniform(rng, 1, rad);
      const Point q{cx + rr * std::cos(a), cy + rr * std::sin(a)};
      if (p.points.empty() || !(p.points.back() == q)) p.points.push_back(q);
    }
    const BBox env = envelope(p);
    if (p.valid() && env.width() >= 2 && env.height() >= 2) return p;
  }
  const double bw = uniform(rng, 2, w * 0.6), bh = uniform(rng, 2, h * 0.6);
  const double x = uniform(rng, 0, w - bw), y = uniform(rng, 0, h - bh);
  return BBox{x, y, x + bw, y + bh};
}

/// Seeded project with up to 20 images and 200 annotations of every kind
/// the mode allows.
inline RandomProject make_random_project(prelabel::Store& store, const std::filesystem::path& dir,
                                         std::uint64_t seed, const std::string& name) {
  using namespace prelabel;
  std::mt19937_64 rng(seed);
  static const std::vector<std::string> pool{"cat",   "dog",           "bird", "traffic light",
                                             "car",   "person",        "bus",  "stop sign",
                                             "apple", "fire hydrant"};
  RandomProject rp;
  rp.mode = static_cast<ProjectMode>(uniform_int(rng, 0, 2));
  std::vector<std::string> classes = pool;
  std::shuffle(classes.begin(), classes.end(), rng);
  classes.resize(uniform_int(rng, 1, 6));
  rp.classes = classes;
  rp.id = store.create_project(name, rp.mode, classes).id;
  const auto class_rows = store.classes(rp.id);

  std::filesystem::create_directories(dir);
  const int images = uniform_int(rng, 1, 20);
  int budget = 200;
  for (int i = 0; i < images; ++i) {
    const int w = uniform_int(rng, 24, 320), h = uniform_int(rng, 24, 240);
    const auto path = write_blank_image(dir / ("img_" + std::to_string(i) + ".ppm"), w, h);
    rp.images.push_back(path);
    const ImageRecord rec = store.add_image(rp.id, path);
    const int n = std::min(budget, uniform_int(rng, 0, 15));
    budget -= n;
    std::vector<NewAnnotation> items;
    for (int k = 0; k < n; ++k) {
      NewAnnotation a;
      a.class_id = class_rows[uniform_int(rng, 0, static_cast<int>(class_rows.size()) - 1)].id;
      a.geometry = random_geometry(rng, rp.mode, w, h);
      if (uniform_int(rng, 0, 1)) a.detector_score = uniform(rng, 0, 1);
      if (uniform_int(rng, 0, 1)) a.verified_score = uniform(rng, 0, 1);
      a.source = static_cast<AnnotationSource>(uniform_int(rng, 0, 3));
      items.push_back(std::move(a));
    }
    const auto r = store.upsert_annotations(rec.id, items, {});
    if (!r.rejected.empty()) throw std::runtime_error("generator made invalid item: " + r.rejected[0].reason);
  }
  return rp;
}

/// Policy a round trip must use for this mode and format.
inline prelabel::GeometryPolicy policy_for(prelabel::ProjectMode mode, prelabel::ExportFormat f) {
  try {
    prelabel::check_export_supported(mode, f, prelabel::GeometryPolicy::as_stored);
    return prelabel::GeometryPolicy::as_stored;
  } catch (const prelabel::InputError&) {
    return prelabel::GeometryPolicy::boxes_only;
  }
}

inline bool close_lists(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > tol) return false;
  }
  return true;
}

// Corner sets of 8-number lines compared without regard to order.
inline bool same_corner_set(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  if (a.size() != 8 || b.size() != 8) return false;
  for (std::size_t i = 0; i < 8; i += 2) {
    bool hit = false;
    for (std::size_t j = 0; j < 8; j += 2) {
      if (std::abs(a[i] - b[j]) <= tol && std::abs(a[i + 1] - b[j + 1]) <= tol) hit = true;
    }
    if (!hit) return false;
  }
  return true;
}

inline std::vector<double> numbers_of(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  double v;
  while (in >> v) out.push_back(v);
  return out;
}

/// Per-image, per-object comparison of two bundles of the same format.
/// Returns an empty string when equivalent, else the first difference.
inline std::string bundle_difference(prelabel::ExportFormat format, prelabel::ProjectMode mode,
                                     const prelabel::FileMap& a, const prelabel::FileMap& b) {
  using prelabel::ExportFormat;
  using nlohmann::json;
  const double px = 0.5, norm = 1e-6;
  if (format == ExportFormat::coco) {
    const json ja = json::parse(a.at("annotations.json"));
    const json jb = json::parse(b.at("annotations.json"));
    auto flatten = [](const json& doc) {
      std::map<std::int64_t, std::string> files, cats;
      for (const auto& i : doc["images"]) files[i["id"]] = i["file_name"];
      for (const auto& c : doc["categories"]) cats[c["id"]] = c["name"];
      std::vector<std::pair<std::string, std::vector<double>>> rows;
      for (const auto& an : doc["annotations"]) {
        std::vector<double> nums = an["bbox"].get<std::vector<double>>();
        if (an.contains("segmentation")) {
          for (double v : an["segmentation"][0]) nums.push_back(v);
        }
        rows.push_back({files[an["image_id"]] + "|" + cats[an["category_id"]], nums});
      }
      std::vector<std::string> names;
      for (auto& [id, n] : cats) names.push_back(n);
      return std::make_pair(names, rows);
    };
    const auto fa = flatten(ja), fb = flatten(jb);
    if (fa.first != fb.first) return "category lists differ";
    if (fa.second.size() != fb.second.size()) return "annotation counts differ";
    for (std::size_t i = 0; i < fa.second.size(); ++i) {
      if (fa.second[i].first != fb.second[i].first) return "labels differ at " + std::to_string(i);
      if (!close_lists(fa.second[i].second, fb.second[i].second, px)) {
        return "geometry differs at " + std::to_string(i);
      }
    }
    if (ja["images"].size() != jb["images"].size()) return "image lists differ";
    return {};
  }
  if (format == ExportFormat::yolo) {
    if (a.size() != b.size()) return "file sets differ";
    if (a.at("data.yaml") != b.at("data.yaml")) return "data.yaml differs";
    for (const auto& [name, body] : a) {
      if (name == "data.yaml") continue;
      if (!b.count(name)) return "missing " + name;
      const auto la = prelabel::split(body, '\n'), lb = prelabel::split(b.at(name), '\n');
      if (la.size() != lb.size()) return name + ": line counts differ";
      for (std::size_t i = 0; i < la.size(); ++i) {
        const auto na = numbers_of(la[i]), nb = numbers_of(lb[i]);
        if (na.empty() && nb.empty()) continue;
        if (na.empty() || nb.empty() || na[0] != nb[0]) return name + ": class differs";
        const std::vector<double> ga(na.begin() + 1, na.end()), gb(nb.begin() + 1, nb.end());
        const bool same = mode == prelabel::ProjectMode::obb && ga.size() == 8
                              ? same_corner_set(ga, gb, norm + 1e-12)
                              : close_lists(ga, gb, norm + 1e-12);
        if (!same) return name + ": geometry differs on line " + std::to_string(i + 1);
      }
    }
    return {};
  }
  if (format == ExportFormat::voc) {
    if (a.size() != b.size()) return "file sets differ";
    for (const auto& [name, body] : a) {
      if (!b.count(name)) return "missing " + name;
      if (body != b.at(name)) {
        // integer pixel coordinates: any change exceeds the 0.5 px tolerance
        return name + " differs";
      }
    }
    return {};
  }
  return a == b ? std::string() : std::string("csv bundles differ");
}

}  // namespace testing
