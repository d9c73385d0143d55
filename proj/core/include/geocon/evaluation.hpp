#pragma once

#include <limits>
#include <string>

#include "geocon/raster.hpp"

namespace geocon {

struct FlowMetrics {
  double epe = 0.0;  ///< pixels
  double f1 = 0.0;   ///< fraction of outliers in [0, 1]
};

struct DepthMetrics {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double log_rmse = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
};

/// Mean endpoint error over mask. Throws InvalidArgument on an empty mask.
double epe(const FlowField& est, const FlowField& gt, const ValidMask& mask);

/// Fraction of mask pixels whose endpoint error exceeds both 3 px and 5% of
/// the ground-truth magnitude.
double f1(const FlowField& est, const FlowField& gt, const ValidMask& mask);

FlowMetrics flow_metrics(const FlowField& est, const FlowField& gt, const ValidMask& mask);

struct DepthEvalOptions {
  /// Pixels with ground truth above the cap are excluded.
  double cap = std::numeric_limits<double>::infinity();
  /// Scale est by median(gt) / median(est) over the evaluated pixels.
  bool median_scale = true;
  /// Lower clamp applied to the (scaled) estimate before any metric.
  double min_depth = 1e-3;
};

/// Standard monocular depth errors and threshold accuracies over pixels that
/// are in mask and have 0 < gt <= cap. Throws on an empty selection.
DepthMetrics depth_metrics(const DepthMap& est, const DepthMap& gt, const ValidMask& mask,
                           const DepthEvalOptions& options = {});

/// "key value" lines.
std::string to_report(const FlowMetrics& m);
std::string to_report(const DepthMetrics& m);
std::string csv_header(const FlowMetrics&);
std::string csv_header(const DepthMetrics&);
std::string to_csv_row(const FlowMetrics& m);
std::string to_csv_row(const DepthMetrics& m);

}  // namespace geocon
