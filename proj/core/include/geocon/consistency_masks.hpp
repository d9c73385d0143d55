#pragma once

#include "geocon/raster.hpp"

namespace geocon {

/// Thresholds of the forward-backward check
///   |fwd + bwd'|^2 < alpha1 (|fwd|^2 + |bwd'|^2) + alpha2.
struct FBCheckParams {
  double alpha1 = 0.01;
  double alpha2 = 0.5;  ///< pixels^2

  void validate() const;
};

/// Pixel p is valid iff p + fwd(p) lies inside the image and the round trip
/// through bwd (bilinearly sampled at p + fwd(p)) satisfies the threshold.
ValidMask fb_check(const FlowField& fwd, const FlowField& bwd, const FBCheckParams& params = {});

/// Logical AND. Throws on size mismatch.
ValidMask intersect(const ValidMask& a, const ValidMask& b);

/// Logical NOT.
ValidMask complement(const ValidMask& mask);

}  // namespace geocon
