#include "geocon/losses.hpp"

#include <algorithm>
#include <cmath>

#include "geocon/image_sampling.hpp"
#include "geocon/parallel.hpp"

namespace geocon {

void LossWeights::validate() const {
  for (double w : {lambda_s, lambda_f, lambda_c}) {
    if (!std::isfinite(w) || w < 0.0) {
      throw InvalidArgument("loss weights must be finite and nonnegative");
    }
  }
}

void CensusParams::validate() const {
  if (radius < 1) throw InvalidArgument("census radius must be at least 1");
  if (!(epsilon > 0.0)) throw InvalidArgument("census epsilon must be positive");
  if (!(charbonnier_eps > 0.0)) throw InvalidArgument("census charbonnier_eps must be positive");
}

CensusDescriptor::CensusDescriptor(int width, int height, const CensusParams& params)
    : width_(width), height_(height), taps_(params.taps()), epsilon_(params.epsilon) {
  for (int dy = -params.radius; dy <= params.radius; ++dy) {
    for (int dx = -params.radius; dx <= params.radius; ++dx) {
      if (dx != 0 || dy != 0) offsets_.emplace_back(dx, dy);
    }
  }
  const std::size_t n = static_cast<std::size_t>(width) * height * taps_;
  diffs_.assign(n, 0.0);
  valid_.assign(n, 0);
}

CensusDescriptor census_descriptor(const ImageBuffer& img, const CensusParams& params) {
  params.validate();
  const ImageBuffer gray = img.to_gray();
  const Grid<double>& g = gray.plane();
  CensusDescriptor desc(g.width(), g.height(), params);
  parallel_for(g.height(), [&](int y) {
    for (int x = 0; x < g.width(); ++x) {
      for (int k = 0; k < desc.taps_; ++k) {
        const auto [dx, dy] = desc.offsets_[static_cast<std::size_t>(k)];
        const int qx = x + dx;
        const int qy = y + dy;
        const bool inside = g.contains(qx, qy);
        const int cx = std::clamp(qx, 0, g.width() - 1);
        const int cy = std::clamp(qy, 0, g.height() - 1);
        const std::size_t s = desc.slot(x, y, k);
        desc.diffs_[s] = g(cx, cy) - g(x, y);
        desc.valid_[s] = inside ? 1 : 0;
      }
    }
  });
  return desc;
}

PhotometricLoss photometric_loss(const ImageBuffer& ref, const ImageBuffer& warped,
                                 const ValidMask& mask, const CensusParams& params) {
  require_same_shape(ref, warped, "photometric_loss");
  require_same_shape(ref, mask, "photometric_loss");
  params.validate();
  const int w = ref.width();
  const int h = ref.height();
  PhotometricLoss out;
  out.grad_warped = Grid<double>(w, h, 0.0);
  const std::size_t count = mask.count();
  if (count == 0) {
    out.degenerate_mask = true;
    return out;
  }
  const double inv_count = 1.0 / static_cast<double>(count);
  const CensusDescriptor dr = census_descriptor(ref, params);
  const CensusDescriptor dw = census_descriptor(warped, params);
  const int taps = dr.taps();
  const double eps2 = params.epsilon * params.epsilon;
  const double c = kCensusHammingScale;

  // d loss / d (warped neighbor difference), per pixel and tap.
  std::vector<double> tap_grad(static_cast<std::size_t>(w) * h * taps, 0.0);
  out.value = ordered_row_sum(h, [&](int y) {
    double row = 0.0;
    std::vector<double> dh(static_cast<std::size_t>(taps));
    for (int x = 0; x < w; ++x) {
      if (!mask.valid(x, y)) continue;
      double s = 0.0;
      for (int k = 0; k < taps; ++k) {
        dh[k] = 0.0;
        if (!dr.valid(x, y, k)) continue;
        const double delta = dr.soft(x, y, k) - dw.soft(x, y, k);
        const double denom = c + delta * delta;
        s += delta * delta / denom;
        dh[k] = 2.0 * delta * c / (denom * denom);
      }
      row += charbonnier(s, params.charbonnier_eps);
      const double drho = charbonnier_derivative(s, params.charbonnier_eps) * inv_count;
      for (int k = 0; k < taps; ++k) {
        if (dh[k] == 0.0) continue;
        const double d = dw.difference(x, y, k);
        const double r = d * d + eps2;
        const double dt = eps2 / (r * std::sqrt(r));
        tap_grad[(static_cast<std::size_t>(y) * w + x) * taps + k] = -drho * dh[k] * dt;
      }
    }
    return row;
  });
  out.value *= inv_count;

  const auto& offsets = dr.offsets();
  parallel_for(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      double g = 0.0;
      const std::size_t base = (static_cast<std::size_t>(y) * w + x) * taps;
      for (int k = 0; k < taps; ++k) {
        g -= tap_grad[base + k];
        const int px = x - offsets[k].first;
        const int py = y - offsets[k].second;
        if (px >= 0 && py >= 0 && px < w && py < h) {
          g += tap_grad[(static_cast<std::size_t>(py) * w + px) * taps + k];
        }
      }
      out.grad_warped(x, y) = g;
    }
  });
  return out;
}

namespace {

// Edge weight exp(-mean_c |guide(a) - guide(b)|).
double edge_weight(const ImageBuffer& guide, int ax, int ay, int bx, int by) {
  double sum = 0.0;
  for (int c = 0; c < guide.channels(); ++c) sum += std::abs(guide(ax, ay, c) - guide(bx, by, c));
  return std::exp(-sum / guide.channels());
}

inline double sign(double v) { return (v > 0.0) - (v < 0.0); }

// Sum of edge-weighted absolute first differences of one plane. Gradient goes
// into grad (which must be zeroed), scaled by scale.
double edge_aware_tv(const Grid<double>& field, const ImageBuffer& guide, double scale,
                     Grid<double>& grad) {
  const int w = field.width();
  const int h = field.height();
  // Horizontal and vertical terms are stored per pixel so the gradient can be
  // gathered without write conflicts.
  Grid<double> gx(w, h, 0.0);
  Grid<double> gy(w, h, 0.0);
  const double sum = ordered_row_sum(h, [&](int y) {
    double row = 0.0;
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w) {
        const double d = field(x + 1, y) - field(x, y);
        const double e = edge_weight(guide, x + 1, y, x, y);
        row += std::abs(d) * e;
        gx(x, y) = sign(d) * e * scale;
      }
      if (y + 1 < h) {
        const double d = field(x, y + 1) - field(x, y);
        const double e = edge_weight(guide, x, y + 1, x, y);
        row += std::abs(d) * e;
        gy(x, y) = sign(d) * e * scale;
      }
    }
    return row;
  });
  parallel_for(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      double g = -gx(x, y) - gy(x, y);
      if (x > 0) g += gx(x - 1, y);
      if (y > 0) g += gy(x, y - 1);
      grad(x, y) = g;
    }
  });
  return sum * scale;
}

}  // namespace

DepthSmoothness smoothness_loss(const DepthMap& depth, const ImageBuffer& guide) {
  require_same_shape(depth, guide, "smoothness_loss");
  const int w = depth.width();
  const int h = depth.height();
  const double n = static_cast<double>(depth.size());
  double mean = 0.0;
  for (double d : depth.values()) mean += d;
  mean /= n;
  if (!(mean > 0.0)) throw InvalidArgument("smoothness_loss: depth mean must be positive");

  Grid<double> normalized(w, h);
  for (std::size_t i = 0; i < depth.size(); ++i) normalized[i] = depth[i] / mean;

  DepthSmoothness out;
  Grid<double> grad_norm(w, h, 0.0);
  out.value = edge_aware_tv(normalized, guide, 1.0 / n, grad_norm);

  // f_i = D_i / m with m = sum(D) / n.
  double weighted = 0.0;
  for (std::size_t i = 0; i < depth.size(); ++i) weighted += grad_norm[i] * depth[i];
  const double correction = weighted / (mean * mean * n);
  out.gradient = Grid<double>(w, h);
  for (std::size_t i = 0; i < depth.size(); ++i) {
    out.gradient[i] = grad_norm[i] / mean - correction;
  }
  return out;
}

FlowSmoothness smoothness_loss(const FlowField& flow, const ImageBuffer& guide) {
  require_same_shape(flow, guide, "smoothness_loss");
  const double scale = 1.0 / static_cast<double>(flow.size());
  FlowSmoothness out;
  out.gradient = FlowField(flow.width(), flow.height());
  out.value = edge_aware_tv(flow.u(), guide, scale, out.gradient.u()) +
              edge_aware_tv(flow.v(), guide, scale, out.gradient.v());
  return out;
}

FbFlowLoss fb_flow_loss(const FlowField& fwd, const FlowField& bwd, const ValidMask& mask,
                        double charbonnier_eps) {
  require_same_shape(fwd, bwd, "fb_flow_loss");
  require_same_shape(fwd, mask, "fb_flow_loss");
  const int w = fwd.width();
  const int h = fwd.height();
  FbFlowLoss out;
  out.grad_fwd = FlowField(w, h);
  out.grad_bwd = FlowField(w, h);
  const std::size_t count = mask.count();
  if (count == 0) {
    out.degenerate_mask = true;
    return out;
  }
  const double inv_count = 1.0 / static_cast<double>(count);
  // Per-pixel residual derivative, reused by the serial scatter below.
  FlowField resid_grad(w, h);
  out.value = ordered_row_sum(h, [&](int y) {
    double row = 0.0;
    for (int x = 0; x < w; ++x) {
      if (!mask.valid(x, y)) continue;
      const double fu = fwd.u()(x, y);
      const double fv = fwd.v()(x, y);
      const BilinearSample bu = sample_bilinear(bwd.u(), x + fu, y + fv);
      const BilinearSample bv = sample_bilinear(bwd.v(), x + fu, y + fv);
      const double ru = fu + bu.value;
      const double rv = fv + bv.value;
      row += charbonnier(ru, charbonnier_eps) + charbonnier(rv, charbonnier_eps);
      const double gu = charbonnier_derivative(ru, charbonnier_eps) * inv_count;
      const double gv = charbonnier_derivative(rv, charbonnier_eps) * inv_count;
      resid_grad.set(x, y, gu, gv);
      out.grad_fwd.set(x, y, gu * (1.0 + bu.d_dx) + gv * bv.d_dx,
                       gu * bu.d_dy + gv * (1.0 + bv.d_dy));
    }
    return row;
  });
  out.value *= inv_count;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.valid(x, y)) continue;
      const double tx = x + fwd.u()(x, y);
      const double ty = y + fwd.v()(x, y);
      scatter_bilinear(out.grad_bwd.u(), tx, ty, resid_grad.u()(x, y));
      scatter_bilinear(out.grad_bwd.v(), tx, ty, resid_grad.v()(x, y));
    }
  }
  return out;
}

FbDepthLoss fb_depth_loss(const DepthMap& depth_t, const DepthMap& depth_t1,
                          const FlowField& rigid_fwd, const ValidMask& mask,
                          double charbonnier_eps) {
  require_same_shape(depth_t, depth_t1, "fb_depth_loss");
  require_same_shape(depth_t, rigid_fwd, "fb_depth_loss");
  require_same_shape(depth_t, mask, "fb_depth_loss");
  const int w = depth_t.width();
  const int h = depth_t.height();
  FbDepthLoss out;
  out.grad_depth_t = Grid<double>(w, h, 0.0);
  out.grad_depth_t1 = Grid<double>(w, h, 0.0);
  out.grad_flow = FlowField(w, h);
  const std::size_t count = mask.count();
  if (count == 0) {
    out.degenerate_mask = true;
    return out;
  }
  const double inv_count = 1.0 / static_cast<double>(count);
  out.value = ordered_row_sum(h, [&](int y) {
    double row = 0.0;
    for (int x = 0; x < w; ++x) {
      if (!mask.valid(x, y)) continue;
      const BilinearSample warped =
          sample_bilinear(depth_t1, x + rigid_fwd.u()(x, y), y + rigid_fwd.v()(x, y));
      const double r = depth_t(x, y) - warped.value;
      row += charbonnier(r, charbonnier_eps);
      const double g = charbonnier_derivative(r, charbonnier_eps) * inv_count;
      out.grad_depth_t(x, y) = g;
      out.grad_flow.set(x, y, -g * warped.d_dx, -g * warped.d_dy);
    }
    return row;
  });
  out.value *= inv_count;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.valid(x, y)) continue;
      scatter_bilinear(out.grad_depth_t1, x + rigid_fwd.u()(x, y), y + rigid_fwd.v()(x, y),
                       -out.grad_depth_t(x, y));
    }
  }
  return out;
}

CrossTaskLoss cross_task_loss(const FlowField& rigid, const FlowField& flow, const ValidMask& mask,
                              double charbonnier_eps) {
  require_same_shape(rigid, flow, "cross_task_loss");
  require_same_shape(rigid, mask, "cross_task_loss");
  const int w = rigid.width();
  const int h = rigid.height();
  CrossTaskLoss out;
  out.grad_rigid = FlowField(w, h);
  out.grad_flow = FlowField(w, h);
  const std::size_t count = mask.count();
  if (count == 0) {
    out.degenerate_mask = true;
    return out;
  }
  const double inv_count = 1.0 / static_cast<double>(count);
  out.value = ordered_row_sum(h, [&](int y) {
    double row = 0.0;
    for (int x = 0; x < w; ++x) {
      if (!mask.valid(x, y)) continue;
      const double ru = rigid.u()(x, y) - flow.u()(x, y);
      const double rv = rigid.v()(x, y) - flow.v()(x, y);
      row += charbonnier(ru, charbonnier_eps) + charbonnier(rv, charbonnier_eps);
      const double gu = charbonnier_derivative(ru, charbonnier_eps) * inv_count;
      const double gv = charbonnier_derivative(rv, charbonnier_eps) * inv_count;
      out.grad_rigid.set(x, y, gu, gv);
      out.grad_flow.set(x, y, -gu, -gv);
    }
    return row;
  });
  out.value *= inv_count;
  return out;
}

}  // namespace geocon
