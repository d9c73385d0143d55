#include "geocon/objective.hpp"

#include <cmath>

#include "geocon/image_sampling.hpp"
#include "geocon/parallel.hpp"

namespace geocon {

void ObjectiveConfig::validate() const {
  weights.validate();
  census.validate();
  fb.validate();
  if (!(charbonnier_eps > 0.0)) throw InvalidArgument("charbonnier_eps must be positive");
  if (scales < 1) throw InvalidArgument("scales must be at least 1");
  if (cross_scales < 0) throw InvalidArgument("cross_scales must be nonnegative");
  if (!scale_weights.empty() && static_cast<int>(scale_weights.size()) < scales) {
    throw InvalidArgument("scale_weights needs one entry per scale");
  }
  for (double w : scale_weights) {
    if (!std::isfinite(w) || w < 0.0) throw InvalidArgument("scale weights must be nonnegative");
  }
}

double ObjectiveConfig::scale_weight(int level) const {
  return scale_weights.empty() ? 1.0 : scale_weights.at(static_cast<std::size_t>(level));
}

void SceneState::validate() const {
  depth_t.validate();
  depth_t1.validate();
  require_same_shape(depth_t, depth_t1, "scene state");
  require_same_shape(depth_t, flow_fwd, "scene state");
  require_same_shape(depth_t, flow_bwd, "scene state");
  flow_fwd.validate();
  flow_bwd.validate();
  if (!pose_params.allFinite()) throw InvalidArgument("scene state: pose parameters not finite");
}

Objective::Objective(const ImageBuffer& frame_t, const ImageBuffer& frame_t1, const Intrinsics& k,
                     ObjectiveConfig config)
    : config_(std::move(config)), width_(frame_t.width()), height_(frame_t.height()) {
  config_.validate();
  k.validate();
  frame_t.validate();
  frame_t1.validate();
  require_same_shape(frame_t, frame_t1, "objective frames");
  int w = width_;
  int h = height_;
  for (int l = 1; l < config_.scales; ++l) {
    if (w < 2 || h < 2) {
      throw InvalidArgument("objective: " + std::to_string(config_.scales) +
                            " scales do not fit a " + std::to_string(width_) + "x" +
                            std::to_string(height_) + " image");
    }
    w = (w + 1) / 2;
    h = (h + 1) / 2;
  }
  frames_t_ = build_pyramid(frame_t.to_gray(), config_.scales);
  frames_t1_ = build_pyramid(frame_t1.to_gray(), config_.scales);
  intrinsics_.push_back(k);
  for (int l = 1; l < config_.scales; ++l) intrinsics_.push_back(intrinsics_.back().half_resolution());
}

namespace {

struct LevelFields {
  DepthMap depth_t;
  DepthMap depth_t1;
  FlowField flow_fwd;
  FlowField flow_bwd;
};

std::vector<LevelFields> field_pyramid(const SceneState& s, int levels) {
  std::vector<LevelFields> out;
  out.reserve(static_cast<std::size_t>(levels));
  out.push_back({s.depth_t, s.depth_t1, s.flow_fwd, s.flow_bwd});
  for (int l = 1; l < levels; ++l) {
    const LevelFields& f = out.back();
    out.push_back({downsample(f.depth_t), downsample(f.depth_t1), downsample(f.flow_fwd),
                   downsample(f.flow_bwd)});
  }
  return out;
}

LevelMasks compute_level_masks(const RigidFlowJacobian& rig_f, const RigidFlowJacobian& rig_b,
                               const LevelFields& f, const FBCheckParams& fb) {
  return {intersect(fb_check(rig_f.flow, rig_b.flow, fb), rig_f.in_front),
          intersect(fb_check(rig_b.flow, rig_f.flow, fb), rig_b.in_front),
          fb_check(f.flow_fwd, f.flow_bwd, fb), fb_check(f.flow_bwd, f.flow_fwd, fb)};
}

void add_scaled(Grid<double>& acc, const Grid<double>& g, double s) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += s * g[i];
}

void add_scaled(FlowField& acc, const FlowField& g, double s) {
  add_scaled(acc.u(), g.u(), s);
  add_scaled(acc.v(), g.v(), s);
}

void require_finite(double value, const char* term) {
  if (!std::isfinite(value)) throw NonFiniteLossError(term);
}

// Photometric loss of ref against target warped by flow; the gradient with
// respect to the flow is added into grad_flow, scaled by scale.
double warped_photometric(const ImageBuffer& ref, const ImageBuffer& target,
                          const FlowField& flow, const ValidMask& mask,
                          const CensusParams& census, double scale, FlowField* grad_flow) {
  const SampledImage warped = inverse_warp(target, flow);
  const PhotometricLoss loss = photometric_loss(ref, warped.values, mask, census);
  if (grad_flow != nullptr && !loss.degenerate_mask) {
    const Grid<double>& plane = target.plane();
    parallel_for(flow.height(), [&](int y) {
      for (int x = 0; x < flow.width(); ++x) {
        const double g = loss.grad_warped(x, y);
        if (g == 0.0) continue;
        const BilinearSample s =
            sample_bilinear(plane, x + flow.u()(x, y), y + flow.v()(x, y));
        grad_flow->u()(x, y) += scale * g * s.d_dx;
        grad_flow->v()(x, y) += scale * g * s.d_dy;
      }
    });
  }
  return loss.value;
}

ValidMask gate(PhotometricGating gating, const ValidMask& depth_mask, const ValidMask& flow_mask,
               bool rigid_branch) {
  switch (gating) {
    case PhotometricGating::kOwnBranch:
      return rigid_branch ? depth_mask : flow_mask;
    case PhotometricGating::kRigidMask:
      return depth_mask;
    case PhotometricGating::kFlowMask:
      return flow_mask;
    case PhotometricGating::kIntersection:
      return intersect(depth_mask, flow_mask);
  }
  return depth_mask;
}

}  // namespace

std::vector<LevelMasks> Objective::masks(const SceneState& state) const {
  state.validate();
  const auto fields = field_pyramid(state, levels());
  std::vector<LevelMasks> out;
  for (int l = 0; l < levels(); ++l) {
    const auto& f = fields[static_cast<std::size_t>(l)];
    const auto rig_f =
        rigid_flow_with_jacobian(f.depth_t, intrinsics_[l], state.pose_params, PoseDirection::kForward);
    const auto rig_b =
        rigid_flow_with_jacobian(f.depth_t1, intrinsics_[l], state.pose_params, PoseDirection::kInverse);
    out.push_back(compute_level_masks(rig_f, rig_b, f, config_.fb));
  }
  return out;
}

ObjectiveResult Objective::evaluate(const SceneState& state, bool with_gradient,
                                    const std::vector<LevelMasks>* fixed_masks) const {
  state.validate();
  if (state.width() != width_ || state.height() != height_) {
    throw InvalidArgument("objective: state size does not match the frames");
  }
  if (fixed_masks != nullptr && static_cast<int>(fixed_masks->size()) != levels()) {
    throw InvalidArgument("objective: fixed masks need one entry per level");
  }
  const ObjectiveConfig& cfg = config_;
  const TermSelection& on = cfg.terms;
  const LossWeights& lam = cfg.weights;
  const double eps = cfg.charbonnier_eps;
  const auto fields = field_pyramid(state, levels());

  ObjectiveResult result;
  result.has_gradient = with_gradient;
  StateGradient& grad = result.gradient;
  if (with_gradient) {
    grad.depth_t = Grid<double>(width_, height_, 0.0);
    grad.depth_t1 = Grid<double>(width_, height_, 0.0);
    grad.flow_fwd = FlowField(width_, height_);
    grad.flow_bwd = FlowField(width_, height_);
  }
  LossReport& rep = result.report;

  for (int l = 0; l < levels(); ++l) {
    const LevelFields& f = fields[static_cast<std::size_t>(l)];
    const Intrinsics& k = intrinsics_[static_cast<std::size_t>(l)];
    const int w = f.depth_t.width();
    const int h = f.depth_t.height();
    const double lw = cfg.scale_weight(l);

    const RigidFlowJacobian rig_f =
        rigid_flow_with_jacobian(f.depth_t, k, state.pose_params, PoseDirection::kForward);
    const RigidFlowJacobian rig_b =
        rigid_flow_with_jacobian(f.depth_t1, k, state.pose_params, PoseDirection::kInverse);
    LevelMasks masks = fixed_masks != nullptr ? (*fixed_masks)[static_cast<std::size_t>(l)]
                                              : compute_level_masks(rig_f, rig_b, f, cfg.fb);

    // Level-local gradients: [0] forward direction quantities, [1] backward.
    Grid<double> g_depth[2] = {Grid<double>(w, h, 0.0), Grid<double>(w, h, 0.0)};
    FlowField g_flow[2] = {FlowField(w, h), FlowField(w, h)};
    FlowField g_rigid[2] = {FlowField(w, h), FlowField(w, h)};

    for (int dir = 0; dir < 2; ++dir) {
      const int other = 1 - dir;
      const DepthMap& depth = dir == 0 ? f.depth_t : f.depth_t1;
      const DepthMap& depth_other = dir == 0 ? f.depth_t1 : f.depth_t;
      const FlowField& flow = dir == 0 ? f.flow_fwd : f.flow_bwd;
      const FlowField& flow_other = dir == 0 ? f.flow_bwd : f.flow_fwd;
      const FlowField& rigid = dir == 0 ? rig_f.flow : rig_b.flow;
      const ImageBuffer& ref = dir == 0 ? frames_t_[l] : frames_t1_[l];
      const ImageBuffer& target = dir == 0 ? frames_t1_[l] : frames_t_[l];
      const ValidMask& depth_mask = dir == 0 ? masks.depth_fwd : masks.depth_bwd;
      const ValidMask& flow_mask = dir == 0 ? masks.flow_fwd : masks.flow_bwd;

      if (on.photometric_rigid) {
        const double v = warped_photometric(ref, target, rigid,
                                            gate(cfg.gating, depth_mask, flow_mask, true),
                                            cfg.census, lw, with_gradient ? &g_rigid[dir] : nullptr);
        require_finite(v, "photometric");
        rep.photometric += lw * v;
      }
      if (on.photometric_flow) {
        const double v = warped_photometric(ref, target, flow,
                                            gate(cfg.gating, depth_mask, flow_mask, false),
                                            cfg.census, lw, with_gradient ? &g_flow[dir] : nullptr);
        require_finite(v, "photometric");
        rep.photometric += lw * v;
      }
      if (on.smooth_depth) {
        const DepthSmoothness s = smoothness_loss(depth, ref);
        require_finite(s.value, "smooth");
        rep.smooth += lw * s.value;
        if (with_gradient) add_scaled(g_depth[dir], s.gradient, lw * lam.lambda_s);
      }
      if (on.smooth_flow) {
        const FlowSmoothness s = smoothness_loss(flow, ref);
        require_finite(s.value, "smooth");
        rep.smooth += lw * s.value;
        if (with_gradient) add_scaled(g_flow[dir], s.gradient, lw * lam.lambda_s);
      }
      if (on.fb_flow) {
        const FbFlowLoss fb = fb_flow_loss(flow, flow_other, flow_mask, eps);
        require_finite(fb.value, "forward_backward");
        rep.forward_backward += lw * fb.value;
        if (with_gradient) {
          add_scaled(g_flow[dir], fb.grad_fwd, lw * lam.lambda_f);
          add_scaled(g_flow[other], fb.grad_bwd, lw * lam.lambda_f);
        }
      }
      if (on.fb_depth) {
        const FbDepthLoss fb = fb_depth_loss(depth, depth_other, rigid, depth_mask, eps);
        require_finite(fb.value, "forward_backward");
        rep.forward_backward += lw * fb.value;
        if (with_gradient) {
          add_scaled(g_depth[dir], fb.grad_depth_t, lw * lam.lambda_f);
          add_scaled(g_depth[other], fb.grad_depth_t1, lw * lam.lambda_f);
          add_scaled(g_rigid[dir], fb.grad_flow, lw * lam.lambda_f);
        }
      }
      if (on.cross && l < cfg.cross_scales) {
        const CrossTaskLoss c =
            cross_task_loss(rigid, flow, intersect(depth_mask, flow_mask), eps);
        require_finite(c.value, "cross");
        rep.cross += lw * c.value;
        if (with_gradient) {
          add_scaled(g_rigid[dir], c.grad_rigid, lw * lam.lambda_c);
          add_scaled(g_flow[dir], c.grad_flow, lw * lam.lambda_c);
        }
      }
    }

    if (with_gradient) {
      // Rigid flow -> depth and pose.
      for (int dir = 0; dir < 2; ++dir) {
        const RigidFlowJacobian& jac = dir == 0 ? rig_f : rig_b;
        const FlowField& gr = g_rigid[dir];
        std::vector<Vec6> row_pose(static_cast<std::size_t>(h), Vec6::Zero());
        parallel_for(h, [&](int y) {
          Vec6 acc = Vec6::Zero();
          for (int x = 0; x < w; ++x) {
            const std::size_t i = gr.u().index(x, y);
            const Vec2 g(gr.u()[i], gr.v()[i]);
            if (g.x() == 0.0 && g.y() == 0.0) continue;
            g_depth[dir][i] += g.dot(jac.d_depth[i]);
            acc += jac.d_pose[i].transpose() * g;
          }
          row_pose[static_cast<std::size_t>(y)] = acc;
        });
        for (const Vec6& p : row_pose) grad.pose += p;
      }

      // Back to full resolution through the pyramid adjoints.
      for (int dir = 0; dir < 2; ++dir) {
        Grid<double> gd = std::move(g_depth[dir]);
        FlowField gf = std::move(g_flow[dir]);
        for (int m = l; m > 0; --m) {
          const LevelFields& finer = fields[static_cast<std::size_t>(m - 1)];
          const int fw = finer.depth_t.width();
          const int fh = finer.depth_t.height();
          gd = downsample_adjoint(gd, fw, fh);
          Grid<double> gu = downsample_adjoint(gf.u(), fw, fh);
          Grid<double> gv = downsample_adjoint(gf.v(), fw, fh);
          for (std::size_t i = 0; i < gu.size(); ++i) {
            gu[i] *= 0.5;
            gv[i] *= 0.5;
          }
          gf = FlowField(std::move(gu), std::move(gv));
        }
        add_scaled(dir == 0 ? grad.depth_t : grad.depth_t1, gd, 1.0);
        add_scaled(dir == 0 ? grad.flow_fwd : grad.flow_bwd, gf, 1.0);
      }
    }
    result.masks.push_back(std::move(masks));
  }

  rep.total = rep.photometric + lam.lambda_s * rep.smooth + lam.lambda_f * rep.forward_backward +
              lam.lambda_c * rep.cross;
  require_finite(rep.total, "total");
  return result;
}

LossReport total_loss(const ImageBuffer& frame_t, const ImageBuffer& frame_t1,
                      const Intrinsics& k, const SceneState& state,
                      const ObjectiveConfig& config) {
  return Objective(frame_t, frame_t1, k, config).evaluate(state, false).report;
}

}  // namespace geocon
