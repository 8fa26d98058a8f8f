#pragma once

#include <nlohmann/json_fwd.hpp>

namespace prelabel {

enum class AcceptanceMode {
  /// Candidates are stored pending and reviewed in the UI.
  live_filter,
  /// Candidates are stored accepted right away.
  blind_trust,
};

struct PipelineSettings {
  double detection_threshold = 0.2;
  double cluster_iou_threshold = 0.9;
  double temperature = 1.0;
  AcceptanceMode acceptance_mode = AcceptanceMode::live_filter;
  double min_confidence_filter = 0.0;

  /// Throws InputError naming the first out-of-range field.
  void validate() const;
};

nlohmann::json to_json(const PipelineSettings& s);
/// Missing fields keep their defaults; the result is validated.
PipelineSettings settings_from_json(const nlohmann::json& j);

}  // namespace prelabel
