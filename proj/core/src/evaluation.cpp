#include "geocon/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <vector>

namespace geocon {
namespace {

void check_flow_inputs(const FlowField& est, const FlowField& gt, const ValidMask& mask) {
  require_same_shape(est, gt, "flow metrics");
  require_same_shape(est, mask, "flow metrics");
  if (mask.count() == 0) throw InvalidArgument("no ground truth pixels");
}

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

double epe(const FlowField& est, const FlowField& gt, const ValidMask& mask) {
  check_flow_inputs(est, gt, mask);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const double du = est.u()[i] - gt.u()[i];
    const double dv = est.v()[i] - gt.v()[i];
    sum += std::sqrt(du * du + dv * dv);
    ++n;
  }
  return sum / static_cast<double>(n);
}

double f1(const FlowField& est, const FlowField& gt, const ValidMask& mask) {
  check_flow_inputs(est, gt, mask);
  std::size_t outliers = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const double du = est.u()[i] - gt.u()[i];
    const double dv = est.v()[i] - gt.v()[i];
    const double err = std::sqrt(du * du + dv * dv);
    const double mag = std::sqrt(gt.u()[i] * gt.u()[i] + gt.v()[i] * gt.v()[i]);
    if (err > 3.0 && err > 0.05 * mag) ++outliers;
    ++n;
  }
  return static_cast<double>(outliers) / static_cast<double>(n);
}

FlowMetrics flow_metrics(const FlowField& est, const FlowField& gt, const ValidMask& mask) {
  return {epe(est, gt, mask), f1(est, gt, mask)};
}

DepthMetrics depth_metrics(const DepthMap& est, const DepthMap& gt, const ValidMask& mask,
                           const DepthEvalOptions& options) {
  require_same_shape(est, gt, "depth metrics");
  require_same_shape(est, mask, "depth metrics");
  if (!(options.min_depth > 0.0)) throw InvalidArgument("depth metrics: min_depth must be positive");

  std::vector<std::size_t> selected;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (mask[i] && gt[i] > 0.0 && gt[i] <= options.cap) selected.push_back(i);
  }
  if (selected.empty()) throw InvalidArgument("depth metrics: no pixels to evaluate");

  double scale = 1.0;
  if (options.median_scale) {
    std::vector<double> e;
    std::vector<double> g;
    e.reserve(selected.size());
    g.reserve(selected.size());
    for (std::size_t i : selected) {
      e.push_back(est[i]);
      g.push_back(gt[i]);
    }
    const double me = median(std::move(e));
    if (!(me > 0.0)) throw InvalidArgument("depth metrics: median estimate must be positive");
    scale = median(std::move(g)) / me;
  }

  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double sq = 0.0;
  double sq_log = 0.0;
  std::size_t a1 = 0;
  std::size_t a2 = 0;
  std::size_t a3 = 0;
  for (std::size_t i : selected) {
    const double e = std::max(est[i] * scale, options.min_depth);
    const double g = gt[i];
    const double diff = e - g;
    abs_rel += std::abs(diff) / g;
    sq_rel += diff * diff / g;
    sq += diff * diff;
    const double dl = std::log(e) - std::log(g);
    sq_log += dl * dl;
    const double ratio = std::max(e / g, g / e);
    a1 += ratio < 1.25;
    a2 += ratio < 1.25 * 1.25;
    a3 += ratio < 1.25 * 1.25 * 1.25;
  }
  const double n = static_cast<double>(selected.size());
  return {abs_rel / n,
          sq_rel / n,
          std::sqrt(sq / n),
          std::sqrt(sq_log / n),
          static_cast<double>(a1) / n,
          static_cast<double>(a2) / n,
          static_cast<double>(a3) / n};
}

std::string to_report(const FlowMetrics& m) {
  return "epe " + fmt(m.epe) + "\nf1 " + fmt(m.f1) + "\n";
}

std::string to_report(const DepthMetrics& m) {
  return "abs_rel " + fmt(m.abs_rel) + "\nsq_rel " + fmt(m.sq_rel) + "\nrmse " + fmt(m.rmse) +
         "\nlog_rmse " + fmt(m.log_rmse) + "\na1 " + fmt(m.a1) + "\na2 " + fmt(m.a2) + "\na3 " +
         fmt(m.a3) + "\n";
}

std::string csv_header(const FlowMetrics&) { return "epe,f1"; }
std::string csv_header(const DepthMetrics&) { return "abs_rel,sq_rel,rmse,log_rmse,a1,a2,a3"; }

std::string to_csv_row(const FlowMetrics& m) { return fmt(m.epe) + "," + fmt(m.f1); }

std::string to_csv_row(const DepthMetrics& m) {
  return fmt(m.abs_rel) + "," + fmt(m.sq_rel) + "," + fmt(m.rmse) + "," + fmt(m.log_rmse) + "," +
         fmt(m.a1) + "," + fmt(m.a2) + "," + fmt(m.a3);
}

}  // namespace geocon
