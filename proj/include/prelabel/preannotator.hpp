#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "prelabel/annotation.hpp"
#include "prelabel/providers.hpp"
#include "prelabel/settings.hpp"

namespace prelabel {

class Store;

/// Softmax of similarities / temperature. Throws InputError on an empty
/// vector or non-positive temperature.
std::vector<double> softmax(std::span<const double> similarities, double temperature);

struct LabelVerification {
  std::vector<double> probs;
  std::size_t best = 0;
};

/// Cosine similarity of the crop against every label, softmax with
/// temperature, argmax with ties to the lowest index.
LabelVerification verify_label(const Embedding& crop, std::span<const Embedding> labels,
                               double temperature);

/// A detection after label verification against the project vocabulary.
struct VerifiedDetection {
  Detection detection;
  /// Index into the vocabulary.
  std::size_t label = 0;
  std::vector<double> label_probs;
  double verified_score = 0;
  /// False when the crop was too small to embed; the detector's own label
  /// and score were kept.
  bool verified = true;

  /// Verification probability, or the detector score for unverified items.
  double rank_score() const { return verified ? verified_score : detection.score; }
};

struct ClusterGraph {
  std::size_t node_count = 0;
  /// i < j for every edge, sorted.
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  /// Members ascending; components ordered by their smallest member.
  std::vector<std::vector<std::size_t>> components;
};

/// Edge (i, j) iff iou(boxes[i], boxes[j]) > iou_threshold; components by
/// breadth-first traversal.
ClusterGraph build_cluster_graph(std::span<const BBox> boxes, double iou_threshold);
ClusterGraph build_cluster_graph(std::span<const VerifiedDetection> dets, double iou_threshold);

/// One resolved cluster, before geometry refinement.
struct ResolvedCandidate {
  std::size_t label = 0;
  BBox box;
  std::optional<double> detector_score;
  std::optional<double> verified_score;
  /// Index of the retained member, or nullopt when the union box itself won.
  std::optional<std::size_t> member;
};

/// Collapses one component to a single candidate. Consistent labels keep
/// the best-ranked member; conflicting labels are re-verified on the union
/// crop and the best member carrying the winning label is kept.
ResolvedCandidate resolve_cluster(std::span<const VerifiedDetection> dets,
                                  std::span<const std::size_t> component, const Image& image,
                                  std::span<const Embedding> vocabulary_embeddings,
                                  const Embedder& embedder, double temperature);

/// A pipeline output for one image, labels as vocabulary indices.
struct Candidate {
  std::size_t label = 0;
  Geometry geometry;
  std::optional<double> detector_score;
  std::optional<double> verified_score;
  AnnotationState state = AnnotationState::pending;
};

struct ImageResult {
  std::vector<Candidate> annotations;
  std::size_t raw_detections = 0;
  std::size_t clusters = 0;
  /// No usable detection: the image needs assisted or manual annotation.
  bool needs_manual = false;
};

/// Detect, verify, cluster and resolve one image. Geometry follows the
/// project mode: boxes for detection; for obb and segmentation the resolved
/// box seeds the mask provider and the mask is closed, traced and simplified.
ImageResult preannotate_image(const Image& image, const PipelineSettings& settings,
                              std::span<const std::string> vocabulary, ProjectMode mode,
                              const Providers& providers);

struct ProgressEvent {
  std::int64_t image_id = 0;
  std::string file_name;
  std::string status;  // "done", "needs_manual" or "failed"
  std::size_t annotations = 0;
  std::size_t completed = 0;
  std::size_t total = 0;
};

struct ImageReport {
  std::int64_t image_id = 0;
  std::string file_name;
  std::string status;
  std::size_t raw_detections = 0;
  std::size_t annotations = 0;
  std::string error;
  double millis = 0;
};

struct BatchReport {
  std::size_t total = 0;
  std::size_t processed = 0;
  std::size_t failures = 0;
  std::size_t needs_manual = 0;
  std::size_t annotations = 0;
  std::vector<ImageReport> images;
  double millis = 0;
};

nlohmann::json to_json(const BatchReport& r);

struct BatchOptions {
  /// Worker threads; 0 picks hardware concurrency.
  unsigned threads = 0;
  std::function<void(const ProgressEvent&)> on_progress;
};

/// Runs the pipeline over every image of a project. Images are processed
/// concurrently but committed to the store in image-id order, so repeated
/// runs leave identical store contents. Auto annotations from earlier runs
/// are replaced. A failing image is marked failed and the batch continues.
BatchReport preannotate_batch(Store& store, std::int64_t project_id,
                              const PipelineSettings& settings, const Providers& providers,
                              const BatchOptions& options = {});

}  // namespace prelabel
