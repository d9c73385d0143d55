#pragma once

#include <cmath>
#include <vector>

#include "geocon/raster.hpp"

namespace geocon {

/// Weights of the total objective
///   L = photometric + lambda_s * smooth + lambda_f * forward_backward + lambda_c * cross.
struct LossWeights {
  double lambda_s = 3.0;
  double lambda_f = 0.2;
  double lambda_c = 0.2;

  void validate() const;
};

/// Ternary census settings. Differences are soft-ternarized as
/// d / sqrt(d^2 + epsilon^2), compared with a soft Hamming distance, and the
/// per-pixel distance is passed through a Charbonnier penalty.
struct CensusParams {
  int radius = 1;
  double epsilon = 0.02;
  double charbonnier_eps = 1e-3;

  void validate() const;
  int taps() const { return (2 * radius + 1) * (2 * radius + 1) - 1; }
};

/// Scale c of the soft Hamming term Delta^2 / (c + Delta^2).
inline constexpr double kCensusHammingScale = 0.1;
/// Charbonnier epsilon used by the L1-type consistency terms.
inline constexpr double kDefaultCharbonnierEps = 1e-3;

/// sqrt(x^2 + eps^2) - eps: zero at zero, tends to |x|.
inline double charbonnier(double x, double eps) { return std::sqrt(x * x + eps * eps) - eps; }
inline double charbonnier_derivative(double x, double eps) {
  return x / std::sqrt(x * x + eps * eps);
}

inline double soft_ternary(double diff, double epsilon) {
  return diff / std::sqrt(diff * diff + epsilon * epsilon);
}

struct LossReport {
  double photometric = 0.0;
  double smooth = 0.0;
  double forward_backward = 0.0;
  double cross = 0.0;
  double total = 0.0;

  bool operator==(const LossReport&) const = default;
};

/// Per-pixel neighbor differences of a grayscale image, one tap per neighbor
/// of the (2r+1)^2 patch excluding the center, taps in row-major patch order.
/// Neighbors outside the image read the clamped pixel and carry valid = 0.
class CensusDescriptor {
 public:
  CensusDescriptor(int width, int height, const CensusParams& params);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int taps() const noexcept { return taps_; }
  const std::vector<std::pair<int, int>>& offsets() const noexcept { return offsets_; }

  double difference(int x, int y, int k) const { return diffs_[slot(x, y, k)]; }
  bool valid(int x, int y, int k) const { return valid_[slot(x, y, k)] != 0; }
  /// Soft ternary value in (-1, 1).
  double soft(int x, int y, int k) const { return soft_ternary(difference(x, y, k), epsilon_); }
  /// Hard ternary sign: 0 when |difference| <= epsilon.
  int ternary(int x, int y, int k) const {
    const double d = difference(x, y, k);
    return d > epsilon_ ? 1 : (d < -epsilon_ ? -1 : 0);
  }

 private:
  friend CensusDescriptor census_descriptor(const ImageBuffer& img, const CensusParams& params);

  std::size_t slot(int x, int y, int k) const {
    return (static_cast<std::size_t>(y) * width_ + x) * taps_ + k;
  }

  int width_;
  int height_;
  int taps_;
  double epsilon_;
  std::vector<std::pair<int, int>> offsets_;
  std::vector<double> diffs_;
  std::vector<std::uint8_t> valid_;
};

/// Multi-channel input is averaged to grayscale first.
CensusDescriptor census_descriptor(const ImageBuffer& img, const CensusParams& params = {});

struct PhotometricLoss {
  double value = 0.0;
  bool degenerate_mask = false;
  /// d value / d warped (grayscale).
  Grid<double> grad_warped;
};

/// Mean over mask pixels of the Charbonnier-robustified soft census distance
/// between ref and warped.
PhotometricLoss photometric_loss(const ImageBuffer& ref, const ImageBuffer& warped,
                                 const ValidMask& mask, const CensusParams& params = {});

struct DepthSmoothness {
  double value = 0.0;
  Grid<double> gradient;
};

struct FlowSmoothness {
  double value = 0.0;
  FlowField gradient;
};

/// Edge-aware first-order smoothness on depth / mean(depth), divided by the
/// pixel count.
DepthSmoothness smoothness_loss(const DepthMap& depth, const ImageBuffer& guide);
/// Edge-aware first-order smoothness on both flow components, divided by the
/// pixel count.
FlowSmoothness smoothness_loss(const FlowField& flow, const ImageBuffer& guide);

struct FbFlowLoss {
  double value = 0.0;
  bool degenerate_mask = false;
  FlowField grad_fwd;
  FlowField grad_bwd;
};

/// Mean over mask of the Charbonnier L1 cycle residual fwd(p) + bwd(p + fwd(p)).
FbFlowLoss fb_flow_loss(const FlowField& fwd, const FlowField& bwd, const ValidMask& mask,
                        double charbonnier_eps = kDefaultCharbonnierEps);

struct FbDepthLoss {
  double value = 0.0;
  bool degenerate_mask = false;
  Grid<double> grad_depth_t;
  Grid<double> grad_depth_t1;
  FlowField grad_flow;
};

/// Mean over mask of the Charbonnier L1 difference between depth_t and
/// depth_t1 inverse-warped by rigid_fwd.
FbDepthLoss fb_depth_loss(const DepthMap& depth_t, const DepthMap& depth_t1,
                          const FlowField& rigid_fwd, const ValidMask& mask,
                          double charbonnier_eps = kDefaultCharbonnierEps);

struct CrossTaskLoss {
  double value = 0.0;
  bool degenerate_mask = false;
  FlowField grad_rigid;
  FlowField grad_flow;
};

/// Mean over mask of the Charbonnier L1 endpoint distance between the rigid
/// and the estimated flow.
CrossTaskLoss cross_task_loss(const FlowField& rigid, const FlowField& flow, const ValidMask& mask,
                              double charbonnier_eps = kDefaultCharbonnierEps);

}  // namespace geocon
