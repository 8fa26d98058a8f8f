#include "prelabel/providers.hpp"

#include <cmath>

#include "prelabel/errors.hpp"
#include "prelabel/mock_providers.hpp"
#include "prelabel/sidecar.hpp"

namespace prelabel {

double Embedding::dot(const Embedding& other) const {
  if (other.values.size() != values.size()) {
    throw InputError("embedding dimensions differ");
  }
  double s = 0;
  for (std::size_t i = 0; i < values.size(); ++i) s += values[i] * other.values[i];
  return s;
}

double Embedding::norm() const { return std::sqrt(dot(*this)); }

Embedding normalized(std::vector<double> values) {
  double n2 = 0;
  for (double v : values) n2 += v * v;
  const double n = std::sqrt(n2);
  if (!(n > 0) || !std::isfinite(n)) throw InputError("cannot normalize a zero embedding");
  for (double& v : values) v /= n;
  return Embedding{std::move(values)};
}

void ProviderConfig::validate() const {
  if (kind == ProviderKind::sidecar && endpoint.empty()) {
    throw InputError("sidecar provider requires an endpoint");
  }
  if (!(detection_threshold >= 0 && detection_threshold <= 1)) {
    throw InputError("detection_threshold must be in [0, 1]");
  }
  if (max_in_flight < 1) throw InputError("max_in_flight must be >= 1");
}

Providers make_providers(const ProviderConfig& config, std::span<const std::string> vocabulary) {
  config.validate();
  if (config.kind == ProviderKind::sidecar) {
    auto client =
        std::make_shared<SidecarClient>(config.endpoint, config.max_in_flight, config.model_id);
    return {client, client, client};
  }
  MockConfig mock;
  mock.classes.assign(vocabulary.begin(), vocabulary.end());
  mock.seed = config.seed;
  return make_mock_providers(std::move(mock));
}

BBox checked_crop(const Image& image, const BBox& box) {
  if (!box.valid()) throw InputError("invalid crop box");
  const BBox c = clip_box(box, image.width, image.height);
  if (c.area() < 1.0) throw InputError("crop does not cover at least one square pixel");
  return c;
}

}  // namespace prelabel
