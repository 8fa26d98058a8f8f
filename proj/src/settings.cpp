#include "prelabel/settings.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "prelabel/errors.hpp"

namespace prelabel {

void PipelineSettings::validate() const {
  if (!(detection_threshold >= 0 && detection_threshold <= 1)) {
    throw InputError("detection_threshold must be in [0, 1]");
  }
  if (!(cluster_iou_threshold > 0 && cluster_iou_threshold <= 1)) {
    throw InputError("cluster_iou_threshold must be in (0, 1]");
  }
  if (!(temperature > 0) || !std::isfinite(temperature)) {
    throw InputError("temperature must be positive");
  }
  if (!(min_confidence_filter >= 0 && min_confidence_filter <= 1)) {
    throw InputError("min_confidence_filter must be in [0, 1]");
  }
}

nlohmann::json to_json(const PipelineSettings& s) {
  return {{"detection_threshold", s.detection_threshold},
          {"cluster_iou_threshold", s.cluster_iou_threshold},
          {"temperature", s.temperature},
          {"acceptance_mode",
           s.acceptance_mode == AcceptanceMode::live_filter ? "live_filter" : "blind_trust"},
          {"min_confidence_filter", s.min_confidence_filter}};
}

PipelineSettings settings_from_json(const nlohmann::json& j) {
  PipelineSettings s;
  if (!j.is_object()) throw InputError("settings must be an object");
  try {
    s.detection_threshold = j.value("detection_threshold", s.detection_threshold);
    s.cluster_iou_threshold = j.value("cluster_iou_threshold", s.cluster_iou_threshold);
    s.temperature = j.value("temperature", s.temperature);
    s.min_confidence_filter = j.value("min_confidence_filter", s.min_confidence_filter);
    if (j.contains("acceptance_mode")) {
      const auto mode = j.at("acceptance_mode").get<std::string>();
      if (mode == "live_filter") {
        s.acceptance_mode = AcceptanceMode::live_filter;
      } else if (mode == "blind_trust") {
        s.acceptance_mode = AcceptanceMode::blind_trust;
      } else {
        throw InputError("acceptance_mode must be live_filter or blind_trust");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("settings: ") + e.what());
  }
  s.validate();
  return s;
}

}  // namespace prelabel
