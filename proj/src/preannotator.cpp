#include "prelabel/preannotator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "prelabel/errors.hpp"
#include "prelabel/postprocess.hpp"
#include "prelabel/store.hpp"
#include "prelabel/text.hpp"

namespace prelabel {

std::vector<double> softmax(std::span<const double> s, double temperature) {
  if (s.empty()) throw InputError("softmax of an empty vector");
  if (!(temperature > 0)) throw InputError("temperature must be positive");
  const double top = *std::max_element(s.begin(), s.end());
  std::vector<double> p(s.size());
  double sum = 0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    p[j] = std::exp((s[j] - top) / temperature);
    sum += p[j];
  }
  for (double& v : p) v /= sum;
  return p;
}

LabelVerification verify_label(const Embedding& crop, std::span<const Embedding> labels,
                               double temperature) {
  if (labels.empty()) throw InputError("verify_label needs at least one label embedding");
  std::vector<double> sims(labels.size());
  for (std::size_t j = 0; j < labels.size(); ++j) sims[j] = crop.dot(labels[j]);
  LabelVerification out;
  out.probs = softmax(sims, temperature);
  // Argmax over similarities: same order as the probabilities, but immune to
  // ties created by exp underflow at tiny temperatures.
  for (std::size_t j = 1; j < sims.size(); ++j) {
    if (sims[j] > sims[out.best]) out.best = j;
  }
  return out;
}

ClusterGraph build_cluster_graph(std::span<const BBox> boxes, double iou_threshold) {
  if (!(iou_threshold > 0 && iou_threshold <= 1)) {
    throw InputError("cluster IoU threshold must be in (0, 1]");
  }
  ClusterGraph g;
  g.node_count = boxes.size();
  std::vector<std::vector<std::size_t>> adjacency(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < boxes.size(); ++j) {
      if (iou(boxes[i], boxes[j]) > iou_threshold) {
        g.edges.emplace_back(i, j);
        adjacency[i].push_back(j);
        adjacency[j].push_back(i);
      }
    }
  }
  std::vector<bool> seen(boxes.size(), false);
  std::deque<std::size_t> queue;
  for (std::size_t start = 0; start < boxes.size(); ++start) {
    if (seen[start]) continue;
    std::vector<std::size_t> component;
    seen[start] = true;
    queue.push_back(start);
    while (!queue.empty()) {
      const std::size_t node = queue.front();
      queue.pop_front();
      component.push_back(node);
      for (const std::size_t next : adjacency[node]) {
        if (!seen[next]) {
          seen[next] = true;
          queue.push_back(next);
        }
      }
    }
    std::sort(component.begin(), component.end());
    g.components.push_back(std::move(component));
  }
  return g;
}

ClusterGraph build_cluster_graph(std::span<const VerifiedDetection> dets, double iou_threshold) {
  std::vector<BBox> boxes;
  boxes.reserve(dets.size());
  for (const auto& d : dets) boxes.push_back(d.detection.box);
  return build_cluster_graph(boxes, iou_threshold);
}

namespace {

// Highest rank score, then larger box, then lower index.
std::size_t best_member(std::span<const VerifiedDetection> dets,
                        std::span<const std::size_t> members) {
  std::size_t best = members.front();
  for (const std::size_t i : members.subspan(1)) {
    const double ri = dets[i].rank_score();
    const double rb = dets[best].rank_score();
    if (ri > rb || (ri == rb && dets[i].detection.box.area() > dets[best].detection.box.area())) {
      best = i;
    }
  }
  return best;
}

ResolvedCandidate from_member(const VerifiedDetection& d, std::size_t index) {
  return {d.label, d.detection.box, d.detection.score,
          d.verified ? std::optional(d.verified_score) : std::nullopt, index};
}

}  // namespace

ResolvedCandidate resolve_cluster(std::span<const VerifiedDetection> dets,
                                  std::span<const std::size_t> component, const Image& image,
                                  std::span<const Embedding> vocabulary_embeddings,
                                  const Embedder& embedder, double temperature) {
  if (component.empty()) throw InputError("resolve_cluster: empty component");
  const std::size_t first_label = dets[component.front()].label;
  const bool consistent = std::all_of(component.begin(), component.end(),
                                      [&](std::size_t i) { return dets[i].label == first_label; });
  if (consistent) {
    const std::size_t best = best_member(dets, component);
    return from_member(dets[best], best);
  }

  std::vector<BBox> boxes;
  for (const std::size_t i : component) boxes.push_back(dets[i].detection.box);
  const BBox ub = union_box(boxes);
  Embedding crop;
  try {
    crop = embedder.embed_image_crop(image, ub);
  } catch (const InputError&) {
    const std::size_t best = best_member(dets, component);
    return from_member(dets[best], best);
  }
  const LabelVerification v = verify_label(crop, vocabulary_embeddings, temperature);

  std::vector<std::size_t> matching;
  for (const std::size_t i : component) {
    if (dets[i].label == v.best) matching.push_back(i);
  }
  if (!matching.empty()) {
    const std::size_t best = best_member(dets, matching);
    return from_member(dets[best], best);
  }
  double top_score = 0;
  for (const std::size_t i : component) top_score = std::max(top_score, dets[i].detection.score);
  return {v.best, ub, top_score, v.probs[v.best], std::nullopt};
}

namespace {

Geometry refine_geometry(const BBox& box, const Image& image, ProjectMode mode,
                         const Providers& providers) {
  if (mode == ProjectMode::detection || !providers.masks) return box;
  const BinaryMask mask = providers.masks->generate_mask(image, box);
  const std::vector<Polygon> polys = mask_to_polygons(close_mask(mask));
  if (polys.empty()) return box;
  const Polygon& largest = *std::max_element(
      polys.begin(), polys.end(),
      [](const Polygon& a, const Polygon& b) { return polygon_area(a) < polygon_area(b); });
  if (mode == ProjectMode::segmentation) return largest;
  return min_area_obb(largest.points);
}

}  // namespace

ImageResult preannotate_image(const Image& image, const PipelineSettings& settings,
                              std::span<const std::string> vocabulary, ProjectMode mode,
                              const Providers& providers) {
  settings.validate();
  if (vocabulary.empty()) throw InputError("vocabulary is empty");
  if (!providers.detector || !providers.embedder) {
    throw InputError("detector and embedder providers are required");
  }
  std::vector<std::string> normalized_vocab;
  for (const auto& v : vocabulary) normalized_vocab.push_back(normalize_label(v));

  ImageResult result;
  const std::vector<Detection> detections =
      providers.detector->detect(image, vocabulary, settings.detection_threshold);
  result.raw_detections = detections.size();
  if (detections.empty()) {
    result.needs_manual = true;
    return result;
  }
  const std::vector<Embedding> label_embeddings = providers.embedder->embed_texts(vocabulary);

  std::vector<VerifiedDetection> verified;
  for (const Detection& det : detections) {
    const BBox crop = clip_box(det.box, image.width, image.height);
    if (crop.area() < 1.0) {
      // Too small to embed: keep the detector's label if it is in the vocabulary.
      const auto it = std::find(normalized_vocab.begin(), normalized_vocab.end(),
                                normalize_label(det.label_text));
      if (it == normalized_vocab.end()) continue;
      const auto idx = static_cast<std::size_t>(it - normalized_vocab.begin());
      std::vector<double> onehot(vocabulary.size(), 0.0);
      onehot[idx] = 1.0;
      verified.push_back({det, idx, std::move(onehot), det.score, false});
      continue;
    }
    const Embedding e = providers.embedder->embed_image_crop(image, det.box);
    LabelVerification v = verify_label(e, label_embeddings, settings.temperature);
    const double p = v.probs[v.best];
    verified.push_back({det, v.best, std::move(v.probs), p, true});
  }

  const ClusterGraph graph = build_cluster_graph(verified, settings.cluster_iou_threshold);
  result.clusters = graph.components.size();
  for (const auto& component : graph.components) {
    const ResolvedCandidate rc = resolve_cluster(verified, component, image, label_embeddings,
                                                 *providers.embedder, settings.temperature);
    Candidate c{rc.label, refine_geometry(rc.box, image, mode, providers), rc.detector_score,
                rc.verified_score, AnnotationState::accepted};
    if (settings.acceptance_mode == AcceptanceMode::live_filter) {
      c.state = AnnotationState::pending;
      const double confidence = rc.verified_score.value_or(rc.detector_score.value_or(0.0));
      if (confidence < settings.min_confidence_filter) continue;
    }
    result.annotations.push_back(std::move(c));
  }
  result.needs_manual = result.annotations.empty();
  return result;
}

nlohmann::json to_json(const BatchReport& r) {
  nlohmann::json images = nlohmann::json::array();
  for (const auto& i : r.images) {
    nlohmann::json item{{"image_id", i.image_id},
                        {"file_name", i.file_name},
                        {"status", i.status},
                        {"raw_detections", i.raw_detections},
                        {"annotations", i.annotations},
                        {"millis", i.millis}};
    if (!i.error.empty()) item["error"] = i.error;
    images.push_back(std::move(item));
  }
  return {{"total", r.total},           {"processed", r.processed},
          {"failures", r.failures},     {"needs_manual", r.needs_manual},
          {"annotations", r.annotations}, {"millis", r.millis},
          {"images", images}};
}

BatchReport preannotate_batch(Store& store, std::int64_t project_id,
                              const PipelineSettings& settings, const Providers& providers,
                              const BatchOptions& options) {
  settings.validate();
  const Project project = store.project(project_id);
  const std::vector<LabelClass> classes = store.classes(project_id);
  std::vector<std::string> vocabulary;
  for (const auto& c : classes) vocabulary.push_back(c.name);
  const std::vector<ImageRecord> images = store.images(project_id);

  BatchReport report;
  report.total = images.size();
  const auto batch_start = std::chrono::steady_clock::now();

  struct Outcome {
    std::optional<ImageResult> result;
    std::string error;
    double millis = 0;
  };
  std::vector<std::optional<Outcome>> slots(images.size());
  std::mutex mutex;
  std::condition_variable ready;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= images.size()) return;
      const auto t0 = std::chrono::steady_clock::now();
      Outcome out;
      try {
        const Image img = load_image(images[i].path);
        out.result = preannotate_image(img, settings, vocabulary, project.mode, providers);
      } catch (const std::exception& e) {
        out.error = e.what();
      }
      out.millis =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      {
        std::lock_guard lock(mutex);
        slots[i] = std::move(out);
      }
      ready.notify_all();
    }
  };

  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::clamp<unsigned>(threads, 1, std::max<std::size_t>(images.size(), 1));
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);

  // Commit strictly in image order.
  for (std::size_t i = 0; i < images.size(); ++i) {
    Outcome out;
    {
      std::unique_lock lock(mutex);
      ready.wait(lock, [&] { return slots[i].has_value(); });
      out = std::move(*slots[i]);
      slots[i].reset();
    }
    const ImageRecord& rec = images[i];
    ImageReport ir{rec.id, rec.file_name, "done", 0, 0, out.error, out.millis};
    if (!out.result) {
      ir.status = "failed";
      ++report.failures;
      store.set_image_failed(rec.id, true);
    } else {
      std::vector<NewAnnotation> items;
      for (const Candidate& c : out.result->annotations) {
        items.push_back({classes[c.label].id, c.geometry, c.detector_score, c.verified_score,
                         AnnotationSource::auto_, c.state});
      }
      const UpsertResult up = store.upsert_annotations(rec.id, items, {AnnotationSource::auto_});
      store.set_image_failed(rec.id, false);
      store.mark_preannotated(rec.id);
      ir.raw_detections = out.result->raw_detections;
      ir.annotations = up.inserted;
      if (!up.rejected.empty()) ir.error = "rejected: " + up.rejected.front().reason;
      if (out.result->needs_manual) {
        ir.status = "needs_manual";
        ++report.needs_manual;
      }
      ++report.processed;
      report.annotations += up.inserted;
    }
    if (options.on_progress) {
      options.on_progress({rec.id, rec.file_name, ir.status, ir.annotations, i + 1, images.size()});
    }
    report.images.push_back(std::move(ir));
  }
  pool.clear();
  report.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                            batch_start)
                      .count();
  return report;
}

}  // namespace prelabel
