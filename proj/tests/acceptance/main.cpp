// One PASS/FAIL line per acceptance criterion; exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include "cli.hpp"
#include "fixtures.hpp"
#include "prelabel/postprocess.hpp"
#include "prelabel/preannotator.hpp"
#include "prelabel/synthetic.hpp"
#include "service_fixture.hpp"

using namespace prelabel;
using nlohmann::json;
using testing::uniform;
using testing::uniform_int;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

// ---------------------------------------------------------------- softmax

Outcome softmax_math() {
  std::mt19937_64 rng(101);
  const auto t0 = Clock::now();
  std::size_t failures = 0;
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> s(static_cast<std::size_t>(uniform_int(rng, 2, 20)));
    for (double& v : s) v = uniform(rng, -1, 1);
    const auto arg_s = std::max_element(s.begin(), s.end()) - s.begin();
    for (double tau : {0.1, 1.0, 10.0}) {
      const auto p = softmax(s, tau);
      const double sum = std::accumulate(p.begin(), p.end(), 0.0);
      worst = std::max(worst, std::abs(sum - 1));
      const auto arg_p = std::max_element(p.begin(), p.end()) - p.begin();
      if (std::abs(sum - 1) > 1e-9 || arg_p != arg_s) ++failures;
    }
  }
  const double secs = seconds_since(t0);
  return {failures == 0 && secs < 1.0, "3000 evaluations, failures=" + std::to_string(failures) +
                                           ", max |sum-1|=" + fmt(worst) + ", " + fmt(secs) + " s"};
}

// ---------------------------------------------------------------- clustering

std::vector<std::vector<std::size_t>> union_find_components(const std::vector<BBox>& boxes,
                                                            double thr) {
  std::vector<std::size_t> parent(boxes.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
    return parent[i] == i ? i : parent[i] = find(parent[i]);
  };
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < boxes.size(); ++j) {
      if (iou(boxes[i], boxes[j]) > thr) parent[find(i)] = find(j);
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < boxes.size(); ++i) groups[find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [root, members] : groups) out.push_back(members);
  std::sort(out.begin(), out.end());
  return out;
}

Outcome clustering_oracle() {
  const auto t0 = Clock::now();
  std::size_t mismatches = 0, trials = 0, edges = 0;
  for (double thr : {0.7, 0.9}) {
    std::mt19937_64 rng(202);
    for (int trial = 0; trial < 1000; ++trial, ++trials) {
      // boxes scattered around a few centers so both thresholds see real clusters
      const int n = uniform_int(rng, 0, 50);
      const int centers = uniform_int(rng, 1, 8);
      std::vector<BBox> seeds;
      for (int i = 0; i < centers; ++i) seeds.push_back(testing::random_box(rng, 300, 10, 80));
      std::vector<BBox> boxes;
      for (int i = 0; i < n; ++i) {
        const BBox s = seeds[uniform_int(rng, 0, centers - 1)];
        const double j = uniform(rng, 0, 0.15) * s.width();
        boxes.push_back({s.x1 + uniform(rng, -j, j), s.y1 + uniform(rng, -j, j),
                         s.x2 + uniform(rng, -j, j), s.y2 + uniform(rng, -j, j)});
      }
      const ClusterGraph g = build_cluster_graph(boxes, thr);
      edges += g.edges.size();
      auto got = g.components;
      std::sort(got.begin(), got.end());
      if (got != union_find_components(boxes, thr)) ++mismatches;
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 5.0,
          std::to_string(trials) + " trials at 0.7 and 0.9, mismatches=" +
              std::to_string(mismatches) + ", edges=" + std::to_string(edges) + ", " + fmt(secs) +
              " s"};
}

// ---------------------------------------------------------------- dedup

double cosine(const Embedding& a, const Embedding& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  return dot / std::sqrt(na * nb);
}

// Verification probability of the arg-max label, computed from scratch.
std::pair<std::size_t, double> oracle_verify(const Embedding& crop,
                                             const std::vector<Embedding>& labels, double tau) {
  std::vector<double> z;
  for (const auto& l : labels) z.push_back(cosine(crop, l) / tau);
  const double m = *std::max_element(z.begin(), z.end());
  double total = 0;
  for (double& v : z) total += v = std::exp(v - m);
  std::size_t best = 0;
  for (std::size_t i = 1; i < z.size(); ++i) {
    if (z[i] > z[best]) best = i;
  }
  return {best, z[best] / total};
}

std::size_t planted_match(const std::vector<PlantedObject>& objects, const BBox& box) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < objects.size(); ++i) {
    if (iou(objects[i].box, box) > iou(objects[best].box, box)) best = i;
  }
  return best;
}

Outcome dedup_contract() {
  const std::vector<std::string> vocab{"cat", "dog", "bird", "car"};
  MockConfig cfg;
  cfg.classes = vocab;
  cfg.seed = 303;
  cfg.max_duplicates = 5;
  const MockProviders mock(cfg);
  const Providers providers = make_mock_providers(cfg);
  const auto text = mock.embed_texts(vocab);
  PipelineSettings settings;

  std::size_t scenes = 0, objects = 0, wrong_count = 0, wrong_member = 0, precondition = 0;
  std::size_t duplicated = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed, ++scenes) {
    const SyntheticScene scene = make_scene(mix_seed(303, seed), vocab.size());
    const auto dets = mock.detect(scene.image, vocab, settings.detection_threshold);
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < dets.size(); ++i) {
      groups[planted_match(scene.objects, dets[i].box)].push_back(i);
    }
    // expected survivor per planted object: top verification probability,
    // then larger box, then earlier detection
    std::map<std::size_t, BBox> expected;
    for (const auto& [obj, members] : groups) {
      duplicated += members.size() > 1;
      for (std::size_t a = 0; a < members.size(); ++a) {
        for (std::size_t b = a + 1; b < members.size(); ++b) {
          if (iou(dets[members[a]].box, dets[members[b]].box) <= 0.9) ++precondition;
        }
      }
      std::optional<std::size_t> best;
      double best_p = -1;
      std::set<std::size_t> labels;
      for (const std::size_t i : members) {
        const auto [label, p] = oracle_verify(mock.embed_image_crop(scene.image, dets[i].box), text,
                                              settings.temperature);
        labels.insert(label);
        if (!best || p > best_p ||
            (p == best_p && dets[i].box.area() > dets[*best].box.area())) {
          best = i;
          best_p = p;
        }
      }
      if (labels.size() != 1) ++precondition;
      expected[obj] = dets[*best].box;
    }
    const auto result = preannotate_image(scene.image, settings, vocab, ProjectMode::detection, providers);
    objects += scene.objects.size();
    if (result.annotations.size() != scene.objects.size()) {
      ++wrong_count;
      continue;
    }
    for (const auto& a : result.annotations) {
      const BBox box = std::get<BBox>(a.geometry);
      const auto it = expected.find(planted_match(scene.objects, box));
      if (it == expected.end() || !(it->second == box)) ++wrong_member;
    }
  }
  return {precondition == 0 && wrong_count == 0 && wrong_member == 0 && duplicated > 0,
          std::to_string(scenes) + " scenes, " + std::to_string(objects) + " objects (" +
              std::to_string(duplicated) + " detected more than once), count mismatches=" +
              std::to_string(wrong_count) + ", wrong survivor=" + std::to_string(wrong_member) +
              ", precondition violations=" + std::to_string(precondition)};
}

// ---------------------------------------------------------------- conflicts

Outcome conflict_resolution() {
  const std::vector<std::string> vocab{"cat", "dog", "bird", "car", "person"};
  MockConfig cfg;
  cfg.classes = vocab;
  cfg.seed = 404;
  cfg.mislabel_probability = 0.5;
  const Providers providers = make_mock_providers(cfg);
  PipelineSettings settings;
  std::size_t emitted = 0, correct = 0, conflicted = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const SyntheticScene scene = make_scene(mix_seed(404, seed), vocab.size());
    const auto dets = providers.detector->detect(scene.image, vocab, settings.detection_threshold);
    std::map<std::size_t, std::set<std::string>> names;
    for (const auto& d : dets) names[planted_match(scene.objects, d.box)].insert(d.label_text);
    for (const auto& [obj, n] : names) conflicted += n.size() > 1;
    const auto r = preannotate_image(scene.image, settings, vocab, ProjectMode::detection, providers);
    for (const auto& a : r.annotations) {
      ++emitted;
      const BBox box = std::get<BBox>(a.geometry);
      const auto& obj = scene.objects[planted_match(scene.objects, box)];
      if (iou(obj.box, box) >= 0.5 && a.label == obj.class_index) ++correct;
    }
  }
  const double rate = emitted ? static_cast<double>(correct) / emitted : 0;
  return {rate >= 0.99 && conflicted > 0,
          "500 scenes, " + std::to_string(emitted) + " annotations, planted label on " +
              fmt(100 * rate, 5) + "%, objects with conflicting detector labels=" +
              std::to_string(conflicted)};
}

// ---------------------------------------------------------------- F1

struct Labeled {
  std::size_t label;
  BBox box;
  double score;
};

double f1_score(std::vector<Labeled> predicted, const std::vector<Labeled>& truth) {
  std::stable_sort(predicted.begin(), predicted.end(),
                   [](const Labeled& a, const Labeled& b) { return a.score > b.score; });
  std::vector<bool> used(truth.size(), false);
  std::size_t tp = 0;
  for (const auto& p : predicted) {
    std::optional<std::size_t> best;
    double best_iou = 0.5;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (used[i] || truth[i].label != p.label) continue;
      const double v = iou(truth[i].box, p.box);
      if (v >= best_iou) {
        best = i;
        best_iou = v;
      }
    }
    if (best) {
      used[*best] = true;
      ++tp;
    }
  }
  const double precision = predicted.empty() ? 0 : static_cast<double>(tp) / predicted.size();
  const double recall = truth.empty() ? 0 : static_cast<double>(tp) / truth.size();
  return precision + recall == 0 ? 0 : 2 * precision * recall / (precision + recall);
}

Outcome end_to_end_f1() {
  const auto t0 = Clock::now();
  testing::TempDir dir;
  const std::vector<std::string> vocab{"cat", "dog", "bird", "car", "person"};
  const auto scenes = write_synthetic_dataset(dir / "images", 20, 505, vocab);
  MockConfig cfg;
  cfg.classes = vocab;
  cfg.seed = 505;
  cfg.max_duplicates = 5;
  cfg.mislabel_probability = 0.3;
  const Providers providers = make_mock_providers(cfg);

  Store store(dir / "data");
  const Project p = store.create_project("f1", ProjectMode::detection, vocab);
  for (const auto& e : std::filesystem::directory_iterator(dir / "images")) {
    if (is_image_file(e.path())) store.add_image(p.id, e.path());
  }
  const BatchReport report = preannotate_batch(store, p.id, p.settings, providers);

  std::map<std::string, std::size_t> class_index;
  for (const auto& c : store.classes(p.id)) {
    class_index[c.name] = std::find(vocab.begin(), vocab.end(), c.name) - vocab.begin();
  }
  std::map<std::int64_t, std::size_t> by_class_id;
  for (const auto& c : store.classes(p.id)) by_class_id[c.id] = class_index[c.name];

  std::vector<Labeled> raw, kept, truth;
  for (const auto& rec : store.images(p.id)) {
    const auto& scene = *std::find_if(scenes.begin(), scenes.end(), [&](const SyntheticScene& s) {
      return s.image.name == rec.file_name;
    });
    // independent boxes per image, so offset them into disjoint tiles
    const double dx = 10000.0 * rec.id;
    auto shift = [dx](BBox b) { return BBox{b.x1 + dx, b.y1, b.x2 + dx, b.y2}; };
    for (const auto& o : scene.objects) truth.push_back({o.class_index, shift(o.box), 1});
    for (const auto& d : providers.detector->detect(scene.image, vocab, p.settings.detection_threshold)) {
      const auto it = class_index.find(normalize_label(d.label_text));
      raw.push_back({it == class_index.end() ? SIZE_MAX : it->second, shift(d.box), d.score});
    }
    for (const auto& a : store.annotations(rec.id)) {
      kept.push_back({by_class_id[a.class_id], shift(std::get<BBox>(a.geometry)),
                      a.verified_score.value_or(0)});
    }
  }
  const double raw_f1 = f1_score(raw, truth), post_f1 = f1_score(kept, truth);
  const double secs = seconds_since(t0);
  return {post_f1 >= 0.95 && post_f1 > raw_f1 && report.failures == 0 && secs < 30,
          "20 images, " + std::to_string(truth.size()) + " planted, raw F1=" + fmt(raw_f1) +
              " (" + std::to_string(raw.size()) + " detections), post-filter F1=" + fmt(post_f1) +
              " (" + std::to_string(kept.size()) + " annotations), " + fmt(secs) + " s"};
}

// ---------------------------------------------------------------- RDP

Outcome rdp_contract() {
  const Polygon square{{{0, 0}, {5, 0}, {10, 0}, {10, 5}, {10, 10}, {5, 10}, {0, 10}, {0, 5}}};
  const Polygon simplified = rdp_simplify(square, 0.002 * polygon_perimeter(square));
  const Polygon corners{{{0, 0}, {10, 0}, {10, 10}, {0, 10}}};
  std::mt19937_64 rng(606);
  std::size_t below_three = 0, not_subset = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Polygon poly;
    const int n = uniform_int(rng, 3, 60);
    const double r = uniform(rng, 1, 100);
    for (int i = 0; i < n; ++i) {
      const double a = 2 * std::numbers::pi * i / n;
      const double rr = r * uniform(rng, 0.2, 1.0);
      poly.points.push_back({rr * std::cos(a), rr * std::sin(a)});
    }
    const double eps = uniform(rng, 0, 2) * r * (trial % 3 == 0 ? 10 : 1);
    const Polygon out = rdp_simplify(poly, eps);
    if (out.points.size() < 3) ++below_three;
    for (const auto& q : out.points) {
      if (std::find(poly.points.begin(), poly.points.end(), q) == poly.points.end()) ++not_subset;
    }
  }
  return {simplified.points.size() == 4 && std::is_permutation(simplified.points.begin(),
                                                                simplified.points.end(),
                                                                corners.points.begin()) &&
              below_three == 0 && not_subset == 0,
          "square with midpoints -> " + std::to_string(simplified.points.size()) +
              " vertices; 1000 random rings, below three=" + std::to_string(below_three) +
              ", invented points=" + std::to_string(not_subset)};
}

// ---------------------------------------------------------------- masks

int oracle_holes(const BinaryMask& m) {
  const int w = m.width(), h = m.height();
  std::vector<char> seen(static_cast<std::size_t>(w) * h, 0);
  std::vector<std::pair<int, int>> stack;
  auto flood = [&](int sx, int sy) {
    stack.push_back({sx, sy});
    seen[sy * w + sx] = 1;
    while (!stack.empty()) {
      const auto [x, y] = stack.back();
      stack.pop_back();
      const int nb[4][2] = {{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}};
      for (const auto& n : nb) {
        if (n[0] < 0 || n[1] < 0 || n[0] >= w || n[1] >= h) continue;
        if (m.at(n[0], n[1]) || seen[n[1] * w + n[0]]) continue;
        seen[n[1] * w + n[0]] = 1;
        stack.push_back({n[0], n[1]});
      }
    }
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool edge = x == 0 || y == 0 || x == w - 1 || y == h - 1;
      if (edge && !m.at(x, y) && !seen[y * w + x]) flood(x, y);
    }
  }
  int holes = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!m.at(x, y) && !seen[y * w + x]) {
        ++holes;
        flood(x, y);
      }
    }
  }
  return holes;
}

Outcome mask_closing() {
  std::mt19937_64 rng(707);
  std::size_t masks = 0, holes_before = 0, holes_left = 0, shrunk = 0;
  for (int trial = 0; trial < 200; ++trial, ++masks) {
    const int w = uniform_int(rng, 40, 120), h = uniform_int(rng, 40, 120);
    BinaryMask m(w, h);
    // a solid blob touching or not touching the border
    const int x0 = uniform_int(rng, 0, 8), y0 = uniform_int(rng, 0, 8);
    const int x1 = w - uniform_int(rng, 0, 8), y1 = h - uniform_int(rng, 0, 8);
    m.fill_box({static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(x1),
                static_cast<double>(y1)});
    // holes of side 1..9, each at least its own side away from the blob edge
    const int n = uniform_int(rng, 1, 8);
    for (int k = 0; k < n; ++k) {
      const int hw = uniform_int(rng, 1, 9), hh = uniform_int(rng, 1, 9);
      const int margin = std::max(hw, hh) + 1;
      if (x1 - x0 < 2 * margin + hw || y1 - y0 < 2 * margin + hh) continue;
      const int hx = uniform_int(rng, x0 + margin, x1 - margin - hw);
      const int hy = uniform_int(rng, y0 + margin, y1 - margin - hh);
      for (int y = hy; y < hy + hh; ++y) {
        for (int x = hx; x < hx + hw; ++x) m.set(x, y, false);
      }
    }
    holes_before += static_cast<std::size_t>(oracle_holes(m));
    const BinaryMask closed = close_mask(m, kMaxClosingIterations);
    holes_left += static_cast<std::size_t>(oracle_holes(closed));
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (m.at(x, y) && !closed.at(x, y)) ++shrunk;
      }
    }
  }
  return {holes_before > 0 && holes_left == 0 && shrunk == 0,
          std::to_string(masks) + " masks, holes before=" + std::to_string(holes_before) +
              ", holes after=" + std::to_string(holes_left) +
              ", foreground pixels lost=" + std::to_string(shrunk)};
}

// ---------------------------------------------------------------- formats

Outcome format_round_trips() {
  std::size_t projects = 0, failures = 0, annotations = 0;
  std::map<GeometryKind, std::size_t> csv_kinds;
  std::string first_failure;
  for (std::uint64_t seed = 1; seed <= 100; ++seed, ++projects) {
    testing::TempDir dir;
    Store store(dir / "data");
    const auto rp = testing::make_random_project(store, dir / "images", mix_seed(808, seed), "src");
    for (const auto& rec : store.images(rp.id)) {
      for (const auto& a : store.annotations(rec.id)) {
        ++annotations;
        ++csv_kinds[kind_of(a.geometry)];
      }
    }
    for (auto format : {ExportFormat::coco, ExportFormat::yolo, ExportFormat::voc, ExportFormat::csv}) {
      ExportOptions opts;
      opts.policy = testing::policy_for(rp.mode, format);
      const auto first = export_project(store, rp.id, format, opts).files;
      const auto target =
          store.create_project("copy-" + std::string(to_string(format)), rp.mode, rp.classes).id;
      for (const auto& path : rp.images) store.add_image(target, path);
      std::string diff;
      try {
        const auto report = import_annotations(store, target, format, first);
        if (!report.skipped.empty()) diff = "skipped " + report.skipped[0].reason;
        const auto second = export_project(store, target, format, opts).files;
        if (diff.empty()) diff = testing::bundle_difference(format, rp.mode, first, second);
        if (diff.empty() && format == ExportFormat::csv) {
          // lossless: every stored field survives
          const auto a = store.images(rp.id), b = store.images(target);
          for (std::size_t i = 0; i < a.size() && diff.empty(); ++i) {
            const auto x = store.annotations(a[i].id), y = store.annotations(b[i].id);
            if (x.size() != y.size()) diff = "csv annotation count";
            for (std::size_t k = 0; k < x.size() && diff.empty(); ++k) {
              if (!(x[k].geometry == y[k].geometry) || x[k].detector_score != y[k].detector_score ||
                  x[k].verified_score != y[k].verified_score || x[k].source != y[k].source ||
                  x[k].state != y[k].state) {
                diff = "csv field mismatch";
              }
            }
          }
        }
      } catch (const std::exception& e) {
        diff = e.what();
      }
      if (!diff.empty()) {
        ++failures;
        if (first_failure.empty()) {
          first_failure = "; first: seed " + std::to_string(seed) + " " +
                          std::string(to_string(format)) + ": " + diff;
        }
      }
    }
  }
  const bool all_kinds = csv_kinds[GeometryKind::bbox] && csv_kinds[GeometryKind::obb] &&
                         csv_kinds[GeometryKind::polygon];
  return {failures == 0 && all_kinds,
          std::to_string(projects) + " projects x 4 formats, " + std::to_string(annotations) +
              " annotations (bbox " + std::to_string(csv_kinds[GeometryKind::bbox]) + ", obb " +
              std::to_string(csv_kinds[GeometryKind::obb]) + ", polygon " +
              std::to_string(csv_kinds[GeometryKind::polygon]) + "), failures=" +
              std::to_string(failures) + first_failure};
}

// ---------------------------------------------------------------- service

Outcome service_end_to_end() {
  testing::LiveService s;
  const std::vector<std::string> vocab{"cat", "dog", "bird"};
  auto r = s.post("/api/projects", {{"name", "e2e"}, {"classes", vocab}});
  if (!r || r->status != 201) return {false, "project creation failed"};
  const std::string base = "/api/projects/" + std::to_string(testing::LiveService::body(r)["id"].get<int>());

  write_synthetic_dataset(s.dir / "scenes", 10, 909, vocab);
  r = s.post(base + "/images", {{"folder", (s.dir / "scenes").string()}});
  if (!r || r->status != 201) return {false, "ingest failed"};
  const std::size_t ingested = testing::LiveService::body(r)["items"].size();

  r = s.post(base + "/preannotate", json::object());
  if (!r || r->status != 202) return {false, "preannotate not accepted"};
  const std::string job_path = "/api/jobs/" + std::to_string(testing::LiveService::body(r)["id"].get<int>());
  json job;
  int polls = 0;
  for (; polls < 600; ++polls) {
    job = testing::LiveService::body(s.client->Get(job_path));
    if (job["state"] == "done" || job["state"] == "failed") break;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  if (job["state"] != "done") return {false, "job ended as " + job["state"].dump()};

  const json stats = testing::LiveService::body(s.client->Get(base + "/stats"));
  double completion = 0;
  for (const auto& [k, v] : stats["completion"].items()) completion += v.get<double>();

  r = s.client->Post(base + "/export?format=coco&include_pending=true", "", "application/json");
  const json export_job = testing::LiveService::body(r);
  s.wait_job(export_job["id"]);
  const auto zip = s.client->Get(export_job["download"].get<std::string>());
  const FileMap files = read_zip(zip->body);
  const auto diagnostics = validate_bundle(ExportFormat::coco, files);
  const std::size_t exported =
      json::parse(files.at("annotations.json"))["annotations"].size();

  const bool ok = ingested == 10 && stats["processed"] == 10 && std::abs(completion - 1) < 1e-9 &&
                  diagnostics.empty() && exported > 0;
  return {ok, "ingested=" + std::to_string(ingested) + ", polls=" + std::to_string(polls + 1) +
                  ", processed=" + stats["processed"].dump() + ", completion sum=" +
                  fmt(completion, 12) + ", exported annotations=" + std::to_string(exported) +
                  ", diagnostics=" + std::to_string(diagnostics.size())};
}

// ---------------------------------------------------------------- determinism

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "prelabel");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

std::map<std::string, std::string> headless_run(const std::filesystem::path& root) {
  const std::string images = (root / "images").string(), data = (root / "data").string();
  std::map<std::string, std::string> zips;
  if (run({"synth", "--out", images, "--count", "12", "--classes", "cat,dog,bird,car"}) != 0) {
    throw std::runtime_error("synth failed");
  }
  for (const std::string mode : {"detection", "obb", "segmentation"}) {
    if (run({"--data-dir", data, "--seed", "42", "preannotate", "--project", mode, "--mode", mode,
             "--images", images, "--classes", "cat,dog,bird,car"}) != 0) {
      throw std::runtime_error("preannotate failed");
    }
    for (const std::string format : {"coco", "yolo", "voc", "csv"}) {
      const auto out = root / (mode + "-" + format + ".zip");
      if (run({"--data-dir", data, "export", "--project", mode, "--format", format, "--out",
               out.string(), "--include-pending", "--boxes-only"}) != 0 ||
          run({"--data-dir", data, "export", "--project", mode, "--format", format, "--out",
               (root / (mode + "-" + format + "-stored.zip")).string(), "--include-pending"}) > 1) {
        throw std::runtime_error("export failed");
      }
      zips[out.filename().string()] = read_file(out);
      const auto stored = root / (mode + "-" + format + "-stored.zip");
      if (std::filesystem::exists(stored)) zips[stored.filename().string()] = read_file(stored);
    }
  }
  return zips;
}

Outcome determinism() {
  testing::TempDir a, b;
  const auto first = headless_run(a.path());
  const auto second = headless_run(b.path());
  std::size_t differing = 0, bytes = 0;
  for (const auto& [name, body] : first) {
    bytes += body.size();
    const auto it = second.find(name);
    if (it == second.end() || it->second != body) ++differing;
  }
  return {differing == 0 && first.size() == second.size() && !first.empty(),
          std::to_string(first.size()) + " bundles (" + std::to_string(bytes) +
              " bytes) compared, differing=" + std::to_string(differing)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"verification-math", softmax_math},
      {"clustering-oracle", clustering_oracle},
      {"deduplication-contract", dedup_contract},
      {"conflict-resolution", conflict_resolution},
      {"end-to-end-f1", end_to_end_f1},
      {"rdp", rdp_contract},
      {"mask-closing", mask_closing},
      {"format-round-trips", format_round_trips},
      {"service-end-to-end", service_end_to_end},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  return failed ? 1 : 0;
}
