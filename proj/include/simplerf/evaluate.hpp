#pragma once

#include <string>
#include <vector>

#include "simplerf/metrics.hpp"
#include "simplerf/scene.hpp"

namespace simplerf {

// Per-view comparison of a rendered test view against ground truth. Masked
// variants restrict to pixels corroborated by at least two training views;
// NaN marks a metric with no valid pixels.
struct ViewMetrics {
  int view = -1;
  double psnr_full = 0.0;
  double psnr_masked = 0.0;
  double ssim_full = 0.0;
  double depth_mae_full = 0.0;
  double depth_mae_masked = 0.0;
  double srocc_full = 0.0;
  double srocc_masked = 0.0;
  double floater_full = 0.0;
  double floater_masked = 0.0;
  double visible_frac = 0.0;
};

struct EvalReport {
  std::string scene;
  std::string backend;
  std::vector<ViewMetrics> views;
  ViewMetrics mean;  // per-field mean over views, skipping NaNs
  double scene_complexity = 0.0;

  std::string to_json() const;
  std::string to_markdown() const;
};

// renders[i] is the reconstruction of bundle.test_ids[i]; cameras must match.
EvalReport evaluate(const std::vector<View>& renders, const SceneBundle& bundle,
                    const std::string& backend);

// Inverse of EvalReport::to_json; throws std::invalid_argument on malformed
// input.
EvalReport eval_report_from_json(const std::string& text);

}  // namespace simplerf
