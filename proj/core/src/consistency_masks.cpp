#include "geocon/consistency_masks.hpp"

#include <cmath>

#include "geocon/image_sampling.hpp"
#include "geocon/parallel.hpp"

namespace geocon {

void FBCheckParams::validate() const {
  if (!(alpha1 >= 0.0) || !(alpha2 >= 0.0) || !std::isfinite(alpha1) || !std::isfinite(alpha2)) {
    throw InvalidArgument("fb check: alpha1 and alpha2 must be finite and nonnegative");
  }
}

ValidMask fb_check(const FlowField& fwd, const FlowField& bwd, const FBCheckParams& params) {
  require_same_shape(fwd, bwd, "fb_check");
  params.validate();
  const int w = fwd.width();
  const int h = fwd.height();
  ValidMask mask(w, h, 0);
  parallel_for(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const double fu = fwd.u()(x, y);
      const double fv = fwd.v()(x, y);
      const double tx = x + fu;
      const double ty = y + fv;
      if (!(tx >= 0.0 && tx <= w - 1 && ty >= 0.0 && ty <= h - 1)) continue;
      const double bu = sample_bilinear(bwd.u(), tx, ty).value;
      const double bv = sample_bilinear(bwd.v(), tx, ty).value;
      const double ru = fu + bu;
      const double rv = fv + bv;
      const double residual = ru * ru + rv * rv;
      const double bound =
          params.alpha1 * (fu * fu + fv * fv + bu * bu + bv * bv) + params.alpha2;
      mask(x, y) = residual < bound ? 1 : 0;
    }
  });
  return mask;
}

ValidMask intersect(const ValidMask& a, const ValidMask& b) {
  require_same_shape(a, b, "intersect");
  ValidMask out(a.width(), a.height(), 0);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] != 0 && b[i] != 0) ? 1 : 0;
  return out;
}

ValidMask complement(const ValidMask& mask) {
  ValidMask out(mask.width(), mask.height(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] != 0 ? 0 : 1;
  return out;
}

}  // namespace geocon
