#include "prelabel/mock_providers.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <random>

#include "prelabel/errors.hpp"
#include "prelabel/synthetic.hpp"
#include "prelabel/text.hpp"

namespace prelabel {
namespace {

constexpr std::size_t kMaxMockClasses = 64;

std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t hash_box(const BBox& b) {
  std::uint64_t h = 0;
  for (double v : {b.x1, b.y1, b.x2, b.y2}) h = mix_seed(h, std::bit_cast<std::uint64_t>(v));
  return h;
}

}  // namespace

Rgb class_color(std::size_t index) {
  if (index >= kMaxMockClasses) throw InputError("mock palette supports at most 64 classes");
  return {static_cast<std::uint8_t>(255 - (index % 8) * 18),
          static_cast<std::uint8_t>(60 + (index / 8) * 24),
          static_cast<std::uint8_t>(90 + (index % 5) * 30)};
}

MockProviders::MockProviders(MockConfig config) : config_(std::move(config)) {
  if (config_.classes.size() > kMaxMockClasses) {
    throw InputError("mock palette supports at most 64 classes");
  }
  if (config_.max_duplicates < 1) throw InputError("max_duplicates must be >= 1");
  if (!(config_.min_score >= 0 && config_.min_score <= config_.max_score &&
        config_.max_score < 1)) {
    throw InputError("mock scores must satisfy 0 <= min <= max < 1");
  }
  for (const auto& c : config_.classes) normalized_.push_back(normalize_label(c));
}

std::optional<std::size_t> MockProviders::class_of_color(Rgb c) const {
  for (std::size_t i = 0; i < config_.classes.size(); ++i) {
    if (class_color(i) == c) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> MockProviders::class_index(const std::string& label) const {
  const std::string n = normalize_label(label);
  const auto it = std::find(normalized_.begin(), normalized_.end(), n);
  if (it == normalized_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - normalized_.begin());
}

std::vector<MockProviders::PlantedRegion> MockProviders::find_planted(const Image& image) const {
  const int w = image.width;
  const int h = image.height;
  std::vector<int> cls(static_cast<std::size_t>(w) * h, -1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (auto c = class_of_color(image.pixel(x, y))) cls[y * w + x] = static_cast<int>(*c);
    }
  }
  std::vector<std::uint8_t> seen(cls.size(), 0);
  std::vector<PlantedRegion> out;
  std::deque<std::pair<int, int>> queue;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int c = cls[y * w + x];
      if (c < 0 || seen[y * w + x]) continue;
      BBox box{double(x), double(y), double(x + 1), double(y + 1)};
      seen[y * w + x] = 1;
      queue.emplace_back(x, y);
      while (!queue.empty()) {
        const auto [cx, cy] = queue.front();
        queue.pop_front();
        box = union_box(std::array{box, BBox{double(cx), double(cy), cx + 1.0, cy + 1.0}});
        const std::array<std::pair<int, int>, 4> next{
            {{cx + 1, cy}, {cx - 1, cy}, {cx, cy + 1}, {cx, cy - 1}}};
        for (const auto& [nx, ny] : next) {
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          if (seen[ny * w + nx] || cls[ny * w + nx] != c) continue;
          seen[ny * w + nx] = 1;
          queue.emplace_back(nx, ny);
        }
      }
      out.push_back({static_cast<std::size_t>(c), box});
    }
  }
  return out;
}

std::vector<Detection> MockProviders::detect(const Image& image,
                                             std::span<const std::string> class_names,
                                             double threshold) const {
  if (!(threshold >= 0 && threshold <= 1)) throw InputError("threshold must be in [0, 1]");
  if (image.width < 1 || image.height < 1 || image.rgb.empty()) {
    throw InputError("image is not decoded");
  }
  // Requested names that the palette knows, in request order.
  std::vector<std::pair<std::size_t, std::string>> requested;
  for (const auto& name : class_names) {
    if (auto idx = class_index(name)) requested.emplace_back(*idx, name);
  }

  const std::uint64_t image_seed = mix_seed(config_.seed, content_hash(image));
  const auto regions = find_planted(image);
  std::vector<Detection> out;
  for (std::size_t k = 0; k < regions.size(); ++k) {
    const auto& region = regions[k];
    const auto req = std::find_if(requested.begin(), requested.end(),
                                  [&](const auto& r) { return r.first == region.class_index; });
    if (req == requested.end()) continue;

    std::mt19937_64 rng(mix_seed(image_seed, k));
    std::uniform_int_distribution<int> dup_count(1, config_.max_duplicates);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> score(config_.min_score, config_.max_score);
    std::bernoulli_distribution mislabel(config_.mislabel_probability);

    const BBox truth = region.box;
    const double jx = config_.jitter * truth.width();
    const double jy = config_.jitter * truth.height();
    std::vector<BBox> dups;
    const int n = dup_count(rng);
    for (int d = 0; d < n; ++d) {
      BBox chosen = truth;
      for (int attempt = 0; attempt < 64; ++attempt) {
        BBox cand{truth.x1 + jx * unit(rng), truth.y1 + jy * unit(rng), truth.x2 + jx * unit(rng),
                  truth.y2 + jy * unit(rng)};
        cand = clip_box(cand, image.width, image.height);
        const bool ok = std::all_of(dups.begin(), dups.end(), [&](const BBox& other) {
          return iou(cand, other) > config_.min_duplicate_iou;
        });
        if (ok && cand.area() > 0) {
          chosen = cand;
          break;
        }
      }
      dups.push_back(chosen);

      Detection det{chosen, req->second, score(rng)};
      if (mislabel(rng) && requested.size() > 1) {
        std::uniform_int_distribution<std::size_t> pick(0, requested.size() - 2);
        std::size_t other = pick(rng);
        const std::size_t self = static_cast<std::size_t>(req - requested.begin());
        if (other >= self) ++other;
        det.label_text = requested[other].second;
      }
      out.push_back(std::move(det));
    }
  }
  std::erase_if(out, [&](const Detection& d) { return d.score < threshold; });
  std::stable_sort(out.begin(), out.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
  return out;
}

Embedding MockProviders::embed_image_crop(const Image& image, const BBox& box) const {
  const BBox crop = checked_crop(image, box);
  const std::size_t nc = config_.classes.size();
  std::vector<double> v(dimension(), 0.0);
  const int x0 = static_cast<int>(std::ceil(crop.x1 - 0.5));
  const int y0 = static_cast<int>(std::ceil(crop.y1 - 0.5));
  const int x1 = std::min(image.width, static_cast<int>(std::ceil(crop.x2 - 0.5)));
  const int y1 = std::min(image.height, static_cast<int>(std::ceil(crop.y2 - 0.5)));
  std::size_t total = 0;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      ++total;
      if (auto c = class_of_color(image.pixel(x, y))) {
        v[*c] += 1;
      } else {
        v[nc] += 1;
      }
    }
  }
  if (total == 0) {
    v[nc] = 1;
  } else {
    for (double& e : v) e /= static_cast<double>(total);
  }
  if (config_.embedding_noise > 0) {
    std::mt19937_64 rng(
        mix_seed(mix_seed(config_.seed, content_hash(image)), hash_box(box) ^ 0x9e37u));
    std::normal_distribution<double> noise(0.0, config_.embedding_noise);
    for (double& e : v) e += noise(rng);
  }
  return normalized(std::move(v));
}

std::vector<Embedding> MockProviders::embed_texts(std::span<const std::string> labels) const {
  if (labels.empty()) throw InputError("embed_texts: no labels");
  std::vector<Embedding> out;
  out.reserve(labels.size());
  for (const auto& label : labels) {
    const std::string n = normalize_label(label);
    if (n.empty()) throw InputError("embed_texts: empty label");
    std::vector<double> v(dimension(), 0.0);
    if (auto idx = class_index(n)) {
      v[*idx] = 1;
    } else {
      std::mt19937_64 rng(mix_seed(config_.seed, hash_string(n)));
      std::normal_distribution<double> gauss(0.0, 1.0);
      for (double& e : v) e = gauss(rng);
    }
    out.push_back(normalized(std::move(v)));
  }
  return out;
}

BinaryMask MockProviders::generate_mask(const Image& image, const MaskSeed& seed) const {
  BinaryMask mask(image.width, image.height);
  if (const auto* box = std::get_if<BBox>(&seed)) {
    if (!box->valid()) throw InputError("mask seed box is invalid");
    const BBox c = clip_box(*box, image.width, image.height);
    if (c.area() <= 0) throw InputError("mask seed box lies outside the image");
    mask.fill_box(c);
    return mask;
  }
  const Point p = std::get<Point>(seed);
  if (!(p.x >= 0 && p.y >= 0 && p.x < image.width && p.y < image.height)) {
    throw InputError("mask seed point lies outside the image");
  }
  const int cx = static_cast<int>(std::floor(p.x));
  const int cy = static_cast<int>(std::floor(p.y));
  const int r = config_.click_radius;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (dx * dx + dy * dy > r * r) continue;
      const int x = cx + dx;
      const int y = cy + dy;
      if (x >= 0 && y >= 0 && x < image.width && y < image.height) mask.set(x, y);
    }
  }
  return mask;
}

Providers make_mock_providers(MockConfig config) {
  auto mock = std::make_shared<MockProviders>(std::move(config));
  return {mock, mock, mock};
}

}  // namespace prelabel
