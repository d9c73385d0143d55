#pragma once

#include <string>
#include <vector>

#include "geocon/camera_geometry.hpp"
#include "geocon/consistency_masks.hpp"
#include "geocon/losses.hpp"
#include "geocon/raster.hpp"

namespace geocon {

/// Which valid mask gates each photometric branch.
enum class PhotometricGating {
  kOwnBranch,     ///< rigid branch by the depth mask, flow branch by the flow mask
  kRigidMask,     ///< both branches by the depth mask
  kFlowMask,      ///< both branches by the flow mask
  kIntersection,  ///< both branches by depth mask AND flow mask
};

/// Switches for individual terms; all on by default. Disabled terms contribute
/// neither value nor gradient.
struct TermSelection {
  bool photometric_rigid = true;
  bool photometric_flow = true;
  bool smooth_depth = true;
  bool smooth_flow = true;
  bool fb_flow = true;
  bool fb_depth = true;
  bool cross = true;
};

struct ObjectiveConfig {
  LossWeights weights;
  CensusParams census;
  FBCheckParams fb;
  /// Charbonnier epsilon of the forward-backward and cross-task terms.
  double charbonnier_eps = kDefaultCharbonnierEps;
  /// Pyramid levels evaluated; level 0 is full resolution.
  int scales = 4;
  /// The cross-task term is applied on levels [0, cross_scales).
  int cross_scales = 4;
  /// Per-level multipliers; empty means 1 for every level.
  std::vector<double> scale_weights;
  PhotometricGating gating = PhotometricGating::kOwnBranch;
  TermSelection terms;

  void validate() const;
  double scale_weight(int level) const;
};

/// Latent quantities of a frame pair: depths of both frames, the pose
/// parameters of T_{t->t+1} (axis-angle, translation) and both flows.
struct SceneState {
  DepthMap depth_t;
  DepthMap depth_t1;
  Vec6 pose_params = Vec6::Zero();
  FlowField flow_fwd;
  FlowField flow_bwd;

  int width() const { return depth_t.width(); }
  int height() const { return depth_t.height(); }
  void validate() const;
};

/// Valid regions of one pyramid level. depth_* come from the rigid flows
/// (forward-backward check AND in front of the camera), flow_* from the
/// estimated flows.
struct LevelMasks {
  ValidMask depth_fwd;
  ValidMask depth_bwd;
  ValidMask flow_fwd;
  ValidMask flow_bwd;
};

/// Derivative of the total with respect to the raw state (depth in meters).
struct StateGradient {
  Grid<double> depth_t;
  Grid<double> depth_t1;
  Vec6 pose = Vec6::Zero();
  FlowField flow_fwd;
  FlowField flow_bwd;
};

struct ObjectiveResult {
  LossReport report;
  std::vector<LevelMasks> masks;
  bool has_gradient = false;
  StateGradient gradient;
};

/// Raised when a loss term evaluates to NaN or infinity.
class NonFiniteLossError : public Error {
 public:
  explicit NonFiniteLossError(std::string term)
      : Error("non-finite value in loss term '" + term + "'"), term_(std::move(term)) {}
  const std::string& term() const noexcept { return term_; }

 private:
  std::string term_;
};

/// The full multi-scale, bidirectional objective over one frame pair.
///
/// Per level and per direction it synthesizes the rigid flow from depth and
/// pose, builds the valid masks, and accumulates the census photometric loss
/// of both the rigid and the estimated flow, edge-aware smoothness of depth
/// and flow, the forward-backward flow and depth terms and, on the finest
/// cross_scales levels, the cross-task term. Masks are constants of each
/// evaluation; gradients never flow through them.
class Objective {
 public:
  Objective(const ImageBuffer& frame_t, const ImageBuffer& frame_t1, const Intrinsics& k,
            ObjectiveConfig config);

  const ObjectiveConfig& config() const noexcept { return config_; }
  int levels() const noexcept { return static_cast<int>(intrinsics_.size()); }
  const Intrinsics& intrinsics(int level) const { return intrinsics_.at(level); }

  std::vector<LevelMasks> masks(const SceneState& state) const;

  /// With fixed_masks null, masks are computed from state.
  ObjectiveResult evaluate(const SceneState& state, bool with_gradient,
                           const std::vector<LevelMasks>* fixed_masks = nullptr) const;

 private:
  ObjectiveConfig config_;
  int width_;
  int height_;
  std::vector<ImageBuffer> frames_t_;
  std::vector<ImageBuffer> frames_t1_;
  std::vector<Intrinsics> intrinsics_;
};

/// Report only; convenience wrapper around Objective.
LossReport total_loss(const ImageBuffer& frame_t, const ImageBuffer& frame_t1,
                      const Intrinsics& k, const SceneState& state,
                      const ObjectiveConfig& config);

}  // namespace geocon
