#include "geocon/camera_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "geocon/parallel.hpp"

namespace geocon {

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw InvalidArgument("intrinsics: focal lengths must be positive and finite");
  }
  if (!std::isfinite(cx) || !std::isfinite(cy)) {
    throw InvalidArgument("intrinsics: principal point must be finite");
  }
}

Mat3 Intrinsics::matrix() const {
  Mat3 k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

PoseSE3::PoseSE3(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw InvalidArgument("pose: non-finite rotation or translation");
  }
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > 1e-9 || std::abs(rotation.determinant() - 1.0) > 1e-9) {
    throw InvalidArgument("pose: rotation must be orthonormal with determinant +1");
  }
}

Mat4 PoseSE3::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

PoseSE3 compose(const PoseSE3& a, const PoseSE3& b) {
  return PoseSE3(a.rotation_ * b.rotation_, a.rotation_ * b.translation_ + a.translation_,
                 PoseSE3::Unchecked{});
}

PoseSE3 invert(const PoseSE3& pose) {
  const Mat3 rt = pose.rotation_.transpose();
  return PoseSE3(rt, -(rt * pose.translation_), PoseSE3::Unchecked{});
}

Mat3 hat(const Vec3& w) {
  Mat3 m;
  m << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
  return m;
}

Mat3 so3_exp(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const Mat3 k = hat(omega);
  double a = 0.0;
  double b = 0.0;
  if (theta2 < 1e-8) {
    a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0;
    b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
  } else {
    const double theta = std::sqrt(theta2);
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  return Mat3::Identity() + a * k + b * (k * k);
}

Vec3 so3_log(const Mat3& rotation) {
  const double cos_theta = std::clamp((rotation.trace() - 1.0) * 0.5, -1.0, 1.0);
  const Vec3 skew(rotation(2, 1) - rotation(1, 2), rotation(0, 2) - rotation(2, 0),
                  rotation(1, 0) - rotation(0, 1));
  const double theta = std::atan2(0.5 * skew.norm(), cos_theta);
  if (theta < 1e-4) {
    // sin(theta) ~ theta (1 - theta^2 / 6)
    return 0.5 * (1.0 + theta * theta / 6.0) * skew;
  }
  if (std::numbers::pi - theta > 1e-4) {
    return (theta / (2.0 * std::sin(theta))) * skew;
  }
  // Near pi the skew part vanishes; recover the axis from the symmetric part.
  const Mat3 sym = 0.5 * (rotation + rotation.transpose());
  const double one_minus_cos = 1.0 - cos_theta;
  Vec3 axis;
  int i = 0;
  sym.diagonal().maxCoeff(&i);
  axis[i] = std::sqrt(std::max(0.0, (sym(i, i) - cos_theta) / one_minus_cos));
  for (int j = 0; j < 3; ++j) {
    if (j != i) axis[j] = sym(i, j) / (one_minus_cos * axis[i]);
  }
  axis.normalize();
  if (axis.dot(skew) < 0.0) axis = -axis;
  return theta * axis;
}

Mat3 so3_left_jacobian(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const Mat3 k = hat(omega);
  double a = 0.0;
  double b = 0.0;
  if (theta2 < 1e-8) {
    a = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
    b = 1.0 / 6.0 - theta2 / 120.0 + theta2 * theta2 / 5040.0;
  } else {
    const double theta = std::sqrt(theta2);
    a = (1.0 - std::cos(theta)) / theta2;
    b = (theta - std::sin(theta)) / (theta2 * theta);
  }
  return Mat3::Identity() + a * k + b * (k * k);
}

PoseSE3 pose_from_params(const Vec6& params) {
  return PoseSE3(so3_exp(params.head<3>()), params.tail<3>(), PoseSE3::Unchecked{});
}

Vec6 params_from_pose(const PoseSE3& pose) {
  Vec6 p;
  p.head<3>() = so3_log(pose.rotation());
  p.tail<3>() = pose.translation();
  return p;
}

namespace {

// Shared by the scalar and the field routes so both produce identical bits.
inline ProjectedPixel project_point(const Vec3& point, const Vec3& transformed, const Vec2& pixel,
                                    const Intrinsics& k) {
  ProjectedPixel out;
  out.depth = transformed.z();
  if (!(transformed.z() > kMinCameraDepth)) {
    out.pixel = pixel;
    out.in_front = false;
    return out;
  }
  out.flow = Vec2(k.fx * (transformed.x() / transformed.z() - point.x() / point.z()),
                  k.fy * (transformed.y() / transformed.z() - point.y() / point.z()));
  out.pixel = pixel + out.flow;
  out.in_front = true;
  return out;
}

}  // namespace

ProjectedPixel project_pixel(const Vec2& pixel, double depth, const Intrinsics& k,
                             const PoseSE3& pose) {
  if (!(depth > 0.0)) throw InvalidArgument("project_pixel: depth must be positive");
  const Vec3 point = depth * k.ray(pixel.x(), pixel.y());
  return project_point(point, pose * point, pixel, k);
}

RigidFlow rigid_flow(const DepthMap& depth, const Intrinsics& k, const PoseSE3& pose) {
  k.validate();
  depth.validate();
  RigidFlow out{FlowField(depth.width(), depth.height()),
                ValidMask(depth.width(), depth.height(), 0)};
  parallel_for(depth.height(), [&](int y) {
    for (int x = 0; x < depth.width(); ++x) {
      const Vec2 p(x, y);
      const ProjectedPixel q = project_pixel(p, depth(x, y), k, pose);
      if (q.in_front) {
        out.flow.set(x, y, q.flow.x(), q.flow.y());
        out.in_front(x, y) = 1;
      }
    }
  });
  return out;
}

RigidFlowJacobian rigid_flow_with_jacobian(const DepthMap& depth, const Intrinsics& k,
                                           const Vec6& pose_params, PoseDirection direction) {
  k.validate();
  const int w = depth.width();
  const int h = depth.height();
  const Vec3 omega = pose_params.head<3>();
  const Vec3 trans = pose_params.tail<3>();
  const Mat3 r = so3_exp(omega);

  // Effective transform Y = A X + b and its parameter derivatives.
  Mat3 a;
  Vec3 b;
  Mat3 jac_rot;
  Mat3 d_trans;
  if (direction == PoseDirection::kForward) {
    a = r;
    b = trans;
    jac_rot = so3_left_jacobian(omega);
    d_trans = Mat3::Identity();
  } else {
    a = r.transpose();
    b = -(a * trans);
    jac_rot = so3_left_jacobian(-omega);
    d_trans = -a;
  }

  RigidFlowJacobian out{FlowField(w, h), ValidMask(w, h, 0),
                        std::vector<Vec2>(depth.size(), Vec2::Zero()),
                        std::vector<Mat26>(depth.size(), Mat26::Zero())};
  parallel_for(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = depth.index(x, y);
      const Vec3 ray = k.ray(x, y);
      const Vec3 point = depth(x, y) * ray;
      const Vec3 rotated = a * point;
      const Vec3 transformed = rotated + b;
      const ProjectedPixel q = project_point(point, transformed, Vec2(x, y), k);
      if (!q.in_front) continue;
      out.flow.set(x, y, q.flow.x(), q.flow.y());
      out.in_front(x, y) = 1;

      const double inv_z = 1.0 / transformed.z();
      Eigen::Matrix<double, 2, 3> proj;
      proj << k.fx * inv_z, 0.0, -k.fx * transformed.x() * inv_z * inv_z, 0.0, k.fy * inv_z,
          -k.fy * transformed.y() * inv_z * inv_z;

      out.d_depth[i] = proj * (a * ray);

      // d(exp(w) X)/dw = -[exp(w) X]x J_l(w); for the inverse, Y = exp(-w)(X - t)
      // gives +[Y]x J_l(-w).
      Mat3 d_rot;
      if (direction == PoseDirection::kForward) {
        d_rot = -hat(rotated) * jac_rot;
      } else {
        d_rot = hat(transformed) * jac_rot;
      }
      out.d_pose[i].leftCols<3>() = proj * d_rot;
      out.d_pose[i].rightCols<3>() = proj * d_trans;
    }
  });
  return out;
}

}  // namespace geocon
