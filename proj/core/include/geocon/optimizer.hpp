#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "geocon/objective.hpp"
#include "geocon/synthetic_scenes.hpp"

namespace geocon {

struct OptimizerConfig {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double adam_epsilon = 1e-8;
  int iterations = 2000;
  ObjectiveConfig objective;

  void validate() const;
};

/// Flat optimizer parameter vector of a state:
///   [log depth_t | log depth_t1 | pose (6) | fwd u | fwd v | bwd u | bwd v].
/// Depth lives in log space so every update keeps it positive.
std::vector<double> pack_parameters(const SceneState& state);
SceneState unpack_parameters(std::span<const double> params, int width, int height);
std::size_t parameter_count(int width, int height);

/// Exact depths, pose and flows of a rendered scene.
SceneState ground_truth_state(const GroundTruth& gt);

/// Copy of state with both depths scaled by U[1 - depth_noise, 1 + depth_noise]
/// per pixel and U[-flow_noise, flow_noise] added to every flow component.
/// Draw order: depth_t, depth_t1, fwd u, fwd v, bwd u, bwd v.
SceneState perturb_state(const SceneState& state, std::uint64_t seed, double depth_noise,
                         double flow_noise);

/// Offsets of each block inside the flat vector.
struct ParameterLayout {
  std::size_t depth_t = 0;
  std::size_t depth_t1 = 0;
  std::size_t pose = 0;
  std::size_t flow_fwd_u = 0;
  std::size_t flow_fwd_v = 0;
  std::size_t flow_bwd_u = 0;
  std::size_t flow_bwd_v = 0;
  std::size_t size = 0;

  static ParameterLayout for_size(int width, int height);
};

struct Evaluation {
  LossReport report;
  /// d total / d parameters, laid out as pack_parameters.
  std::vector<double> gradient;
  std::vector<LevelMasks> masks;
};

/// Loss and gradient of the state in parameter space. Recomputes rigid flows
/// and masks unless fixed_masks is given. Throws NonFiniteLossError naming the
/// offending term.
Evaluation evaluate(const Objective& objective, const SceneState& state,
                    const std::vector<LevelMasks>* fixed_masks = nullptr);
Evaluation evaluate(const SceneState& state, const ImageBuffer& frame_t,
                    const ImageBuffer& frame_t1, const Intrinsics& k, const OptimizerConfig& cfg);

/// First and second moment estimates of Adam.
struct AdamMoments {
  std::vector<double> first;
  std::vector<double> second;
  long steps = 0;
};

struct StepResult {
  SceneState state;
  AdamMoments moments;
};

/// One bias-corrected Adam update of the parameter vector.
StepResult step(const SceneState& state, std::span<const double> gradient,
                const AdamMoments& moments, const OptimizerConfig& cfg);

struct RefineResult {
  SceneState state;
  /// Report of the state before each update, one entry per iteration.
  std::vector<LossReport> trace;
};

/// Raised when the total loss stops being finite during refine.
class DivergenceError : public Error {
 public:
  DivergenceError(std::string term, std::vector<LossReport> trace)
      : Error("refinement diverged at iteration " + std::to_string(trace.size()) +
              " (non-finite '" + term + "')"),
        term_(std::move(term)),
        trace_(std::move(trace)) {}

  const std::string& term() const noexcept { return term_; }
  const std::vector<LossReport>& trace() const noexcept { return trace_; }

 private:
  std::string term_;
  std::vector<LossReport> trace_;
};

using ProgressCallback = std::function<void(int iteration, const LossReport& report)>;

/// Runs cfg.iterations Adam steps from init. Masks are recomputed every
/// iteration and held fixed while differentiating.
RefineResult refine(const ImageBuffer& frame_t, const ImageBuffer& frame_t1, const Intrinsics& k,
                    const SceneState& init, const OptimizerConfig& cfg,
                    const ProgressCallback& progress = {});

}  // namespace geocon
