#include "geocon/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "geocon/parallel.hpp"

namespace geocon {

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("learning_rate must be positive");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw InvalidArgument("beta1 and beta2 must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw InvalidArgument("adam_epsilon must be positive");
  if (iterations < 0) throw InvalidArgument("iterations must be nonnegative");
  objective.validate();
}

ParameterLayout ParameterLayout::for_size(int width, int height) {
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  ParameterLayout l;
  l.depth_t = 0;
  l.depth_t1 = n;
  l.pose = 2 * n;
  l.flow_fwd_u = 2 * n + 6;
  l.flow_fwd_v = 3 * n + 6;
  l.flow_bwd_u = 4 * n + 6;
  l.flow_bwd_v = 5 * n + 6;
  l.size = 6 * n + 6;
  return l;
}

std::size_t parameter_count(int width, int height) {
  return ParameterLayout::for_size(width, height).size;
}

std::vector<double> pack_parameters(const SceneState& s) {
  const auto l = ParameterLayout::for_size(s.width(), s.height());
  const std::size_t n = s.depth_t.size();
  std::vector<double> p(l.size);
  for (std::size_t i = 0; i < n; ++i) {
    p[l.depth_t + i] = std::log(s.depth_t[i]);
    p[l.depth_t1 + i] = std::log(s.depth_t1[i]);
    p[l.flow_fwd_u + i] = s.flow_fwd.u()[i];
    p[l.flow_fwd_v + i] = s.flow_fwd.v()[i];
    p[l.flow_bwd_u + i] = s.flow_bwd.u()[i];
    p[l.flow_bwd_v + i] = s.flow_bwd.v()[i];
  }
  for (int j = 0; j < 6; ++j) p[l.pose + j] = s.pose_params[j];
  return p;
}

SceneState unpack_parameters(std::span<const double> p, int width, int height) {
  const auto l = ParameterLayout::for_size(width, height);
  if (p.size() != l.size) throw InvalidArgument("parameter vector has the wrong length");
  SceneState s{DepthMap(width, height), DepthMap(width, height), Vec6::Zero(),
               FlowField(width, height), FlowField(width, height)};
  const std::size_t n = s.depth_t.size();
  for (std::size_t i = 0; i < n; ++i) {
    s.depth_t[i] = std::exp(p[l.depth_t + i]);
    s.depth_t1[i] = std::exp(p[l.depth_t1 + i]);
    s.flow_fwd.u()[i] = p[l.flow_fwd_u + i];
    s.flow_fwd.v()[i] = p[l.flow_fwd_v + i];
    s.flow_bwd.u()[i] = p[l.flow_bwd_u + i];
    s.flow_bwd.v()[i] = p[l.flow_bwd_v + i];
  }
  for (int j = 0; j < 6; ++j) s.pose_params[j] = p[l.pose + j];
  return s;
}

SceneState ground_truth_state(const GroundTruth& gt) {
  return {gt.depth_t, gt.depth_t1, params_from_pose(gt.pose), gt.flow_fwd, gt.flow_bwd};
}

SceneState perturb_state(const SceneState& state, std::uint64_t seed, double depth_noise,
                         double flow_noise) {
  if (!(depth_noise >= 0.0 && depth_noise < 1.0)) {
    throw InvalidArgument("depth noise must lie in [0, 1)");
  }
  if (!(flow_noise >= 0.0)) throw InvalidArgument("flow noise must be nonnegative");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> scale(1.0 - depth_noise, 1.0 + depth_noise);
  std::uniform_real_distribution<double> offset(-flow_noise, flow_noise);
  SceneState s = state;
  if (depth_noise > 0.0) {
    for (auto& d : s.depth_t.values()) d *= scale(rng);
    for (auto& d : s.depth_t1.values()) d *= scale(rng);
  }
  if (flow_noise > 0.0) {
    for (auto* f : {&s.flow_fwd, &s.flow_bwd}) {
      for (auto& v : f->u().values()) v += offset(rng);
      for (auto& v : f->v().values()) v += offset(rng);
    }
  }
  return s;
}

Evaluation evaluate(const Objective& objective, const SceneState& state,
                    const std::vector<LevelMasks>* fixed_masks) {
  ObjectiveResult r = objective.evaluate(state, true, fixed_masks);
  const auto l = ParameterLayout::for_size(state.width(), state.height());
  const std::size_t n = state.depth_t.size();
  const StateGradient& g = r.gradient;
  Evaluation out{r.report, std::vector<double>(l.size, 0.0), std::move(r.masks)};
  for (std::size_t i = 0; i < n; ++i) {
    // d/d log(d) = d * d/dd
    out.gradient[l.depth_t + i] = g.depth_t[i] * state.depth_t[i];
    out.gradient[l.depth_t1 + i] = g.depth_t1[i] * state.depth_t1[i];
    out.gradient[l.flow_fwd_u + i] = g.flow_fwd.u()[i];
    out.gradient[l.flow_fwd_v + i] = g.flow_fwd.v()[i];
    out.gradient[l.flow_bwd_u + i] = g.flow_bwd.u()[i];
    out.gradient[l.flow_bwd_v + i] = g.flow_bwd.v()[i];
  }
  for (int j = 0; j < 6; ++j) out.gradient[l.pose + j] = g.pose[j];
  return out;
}

Evaluation evaluate(const SceneState& state, const ImageBuffer& frame_t,
                    const ImageBuffer& frame_t1, const Intrinsics& k, const OptimizerConfig& cfg) {
  cfg.validate();
  return evaluate(Objective(frame_t, frame_t1, k, cfg.objective), state);
}

StepResult step(const SceneState& state, std::span<const double> gradient,
                const AdamMoments& moments, const OptimizerConfig& cfg) {
  const auto l = ParameterLayout::for_size(state.width(), state.height());
  if (gradient.size() != l.size) throw InvalidArgument("step: gradient has the wrong length");
  StepResult out{state, moments};
  AdamMoments& m = out.moments;
  if (m.first.empty()) {
    m.first.assign(l.size, 0.0);
    m.second.assign(l.size, 0.0);
    m.steps = 0;
  }
  if (m.first.size() != l.size || m.second.size() != l.size) {
    throw InvalidArgument("step: moment vectors have the wrong length");
  }
  ++m.steps;
  const double b1 = cfg.beta1;
  const double b2 = cfg.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(m.steps));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(m.steps));
  std::vector<double> delta(l.size, 0.0);
  const int n = static_cast<int>(l.size);
  constexpr int kChunk = 4096;
  parallel_for((n + kChunk - 1) / kChunk, [&](int c) {
    const int end = std::min(n, (c + 1) * kChunk);
    for (int i = c * kChunk; i < end; ++i) {
      const auto j = static_cast<std::size_t>(i);
      const double g = gradient[j];
      m.first[j] = b1 * m.first[j] + (1.0 - b1) * g;
      m.second[j] = b2 * m.second[j] + (1.0 - b2) * g * g;
      const double mhat = m.first[j] / c1;
      const double vhat = m.second[j] / c2;
      delta[j] = -cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_epsilon);
    }
  });

  // Log-depth update d <- d * exp(delta); entries with zero delta stay bit-identical.
  SceneState& s = out.state;
  for (std::size_t i = 0; i < s.depth_t.size(); ++i) {
    if (delta[l.depth_t + i] != 0.0) s.depth_t[i] *= std::exp(delta[l.depth_t + i]);
    if (delta[l.depth_t1 + i] != 0.0) s.depth_t1[i] *= std::exp(delta[l.depth_t1 + i]);
    s.flow_fwd.u()[i] += delta[l.flow_fwd_u + i];
    s.flow_fwd.v()[i] += delta[l.flow_fwd_v + i];
    s.flow_bwd.u()[i] += delta[l.flow_bwd_u + i];
    s.flow_bwd.v()[i] += delta[l.flow_bwd_v + i];
  }
  for (int j = 0; j < 6; ++j) s.pose_params[j] += delta[l.pose + static_cast<std::size_t>(j)];
  return out;
}

RefineResult refine(const ImageBuffer& frame_t, const ImageBuffer& frame_t1, const Intrinsics& k,
                    const SceneState& init, const OptimizerConfig& cfg,
                    const ProgressCallback& progress) {
  cfg.validate();
  init.validate();
  const Objective objective(frame_t, frame_t1, k, cfg.objective);
  RefineResult result{init, {}};
  result.trace.reserve(static_cast<std::size_t>(cfg.iterations));
  AdamMoments moments;
  for (int it = 0; it < cfg.iterations; ++it) {
    Evaluation e;
    try {
      e = evaluate(objective, result.state);
    } catch (const NonFiniteLossError& err) {
      throw DivergenceError(err.term(), std::move(result.trace));
    }
    result.trace.push_back(e.report);
    if (progress) progress(it, e.report);
    StepResult s = step(result.state, e.gradient, moments, cfg);
    result.state = std::move(s.state);
    moments = std::move(s.moments);
  }
  return result;
}

}  // namespace geocon
