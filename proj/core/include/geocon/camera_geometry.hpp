#pragma once

#include <vector>

#include <Eigen/Core>

#include "geocon/raster.hpp"

namespace geocon {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat26 = Eigen::Matrix<double, 2, 6>;

/// Points whose camera-frame depth falls at or below this are behind the camera.
inline constexpr double kMinCameraDepth = 1e-9;

/// Pinhole intrinsics. Pixel centers sit at integer coordinates.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  void validate() const;
  Mat3 matrix() const;

  /// Back-projected ray K^-1 [x y 1]^T, with unit z.
  Vec3 ray(double x, double y) const { return {(x - cx) / fx, (y - cy) / fy, 1.0}; }

  /// Intrinsics matching a 2x2 average-pooled image: coarse pixel i covers
  /// fine pixels 2i and 2i+1, so its center is at fine coordinate 2i + 0.5.
  Intrinsics half_resolution() const {
    return {fx * 0.5, fy * 0.5, (cx - 0.5) * 0.5, (cy - 0.5) * 0.5};
  }

  bool operator==(const Intrinsics&) const = default;
};

/// Rigid transform x' = R x + t mapping frame-t camera coordinates into the
/// frame-(t+1) camera.
class PoseSE3 {
 public:
  PoseSE3() = default;
  /// Throws InvalidArgument unless rotation is orthonormal with det +1 (1e-9).
  PoseSE3(const Mat3& rotation, const Vec3& translation);

  static PoseSE3 identity() { return {}; }

  const Mat3& rotation() const noexcept { return rotation_; }
  const Vec3& translation() const noexcept { return translation_; }

  Vec3 operator*(const Vec3& point) const { return rotation_ * point + translation_; }

  /// 4x4 homogeneous matrix.
  Mat4 matrix() const;

 private:
  struct Unchecked {};
  PoseSE3(const Mat3& rotation, const Vec3& translation, Unchecked)
      : rotation_(rotation), translation_(translation) {}

  friend PoseSE3 compose(const PoseSE3& a, const PoseSE3& b);
  friend PoseSE3 invert(const PoseSE3& pose);
  friend PoseSE3 pose_from_params(const Vec6& params);

  Mat3 rotation_ = Mat3::Identity();
  Vec3 translation_ = Vec3::Zero();
};

/// a * b: applies b first, then a.
PoseSE3 compose(const PoseSE3& a, const PoseSE3& b);
PoseSE3 invert(const PoseSE3& pose);

/// Skew-symmetric matrix with hat(w) * v == w.cross(v).
Mat3 hat(const Vec3& w);
/// Rodrigues rotation for an axis-angle vector.
Mat3 so3_exp(const Vec3& omega);
/// Axis-angle vector of a rotation, angle in [0, pi].
Vec3 so3_log(const Mat3& rotation);
/// Left Jacobian of SO(3): exp(omega + d) ~= exp(J_l(omega) d) exp(omega).
Mat3 so3_left_jacobian(const Vec3& omega);

/// Params are (axis-angle rotation, translation).
PoseSE3 pose_from_params(const Vec6& params);
Vec6 params_from_pose(const PoseSE3& pose);

struct ProjectedPixel {
  Vec2 pixel = Vec2::Zero();
  /// pixel minus the input pixel, computed as f * (x'/z' - x/z) so that an
  /// unmoved point gives exactly zero.
  Vec2 flow = Vec2::Zero();
  /// z of the transformed point in the target camera.
  double depth = 0.0;
  /// False when the transformed point is at or behind the target camera; pixel
  /// is then the input pixel.
  bool in_front = false;
};

/// Maps pixel p with depth d through K T d K^-1 p and dehomogenizes.
ProjectedPixel project_pixel(const Vec2& pixel, double depth, const Intrinsics& k,
                             const PoseSE3& pose);

struct RigidFlow {
  FlowField flow;
  ValidMask in_front;
};

/// Per-pixel displacement induced by camera motion over a static scene.
/// Pixels that land behind the camera get zero flow and a cleared mask bit.
RigidFlow rigid_flow(const DepthMap& depth, const Intrinsics& k, const PoseSE3& pose);

enum class PoseDirection {
  kForward,  ///< uses T = pose_from_params(params)
  kInverse,  ///< uses T^-1
};

/// Rigid flow together with its derivatives with respect to each pixel's depth
/// and the six pose parameters. Derivatives are zero where in_front is false.
struct RigidFlowJacobian {
  FlowField flow;
  ValidMask in_front;
  std::vector<Vec2> d_depth;
  std::vector<Mat26> d_pose;
};

RigidFlowJacobian rigid_flow_with_jacobian(const DepthMap& depth, const Intrinsics& k,
                                           const Vec6& pose_params, PoseDirection direction);

}  // namespace geocon
