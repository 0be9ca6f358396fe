#pragma once

#include <stdexcept>

#include "mapfuse/types.hpp"

namespace mapfuse {

/// Rigid transform as rotation + translation. Composition and point action
/// follow the usual matrix convention.
struct RigidTransform {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return R * p + t; }

  RigidTransform compose(const RigidTransform& other) const {
    return {R * other.R, R * other.t + t};
  }

  RigidTransform inverse() const { return {R.transpose(), -(R.transpose() * t)}; }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = R;
    m.topRightCorner<3, 1>() = t;
    return m;
  }

  static RigidTransform from_matrix(const Mat4& m) {
    return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
  }
};

/// Thrown by se3_log for rotations too close to the pi ambiguity.
struct Se3LogAmbiguity : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// se(3) tangent vectors are laid out [rho; phi]: translation part first,
// rotation part last.
inline Vec3 se3_rho(const Vec6& xi) { return xi.head<3>(); }
inline Vec3 se3_phi(const Vec6& xi) { return xi.tail<3>(); }

Mat3 skew(const Vec3& v);

/// Left Jacobian of SO(3); equals the V matrix coupling rho into translation.
Mat3 so3_left_jacobian(const Vec3& phi);
Mat3 so3_left_jacobian_inv(const Vec3& phi);

Mat3 so3_exp(const Vec3& phi);
/// Throws Se3LogAmbiguity for angles >= pi - 1e-6.
Vec3 so3_log(const Mat3& R);

RigidTransform se3_exp(const Vec6& xi);
Vec6 se3_log(const RigidTransform& T);

/// Q block of the SE(3) left Jacobian (couples rho and phi).
Mat3 se3_q_matrix(const Vec3& rho, const Vec3& phi);

/// 6x6 left Jacobian: exp(xi + d) = exp(J_l(xi) d) * exp(xi) to first order.
Mat6 se3_left_jacobian(const Vec6& xi);
Mat6 se3_left_jacobian_inv(const Vec6& xi);

/// Adjoint of T: Adj(T) * xi = log(T * exp(xi) * T^-1) to first order.
Mat6 se3_adjoint(const RigidTransform& T);

/// p_out = R p + t and its 3x6 Jacobian w.r.t. the global tangent vector xi.
/// The Jacobian uses the identity d(T(xi) p)/dxi = [I | -skew(T p)] J_l(xi).
Vec3 transform_point(const Vec6& xi, const Vec3& p, Mat36* jacobian = nullptr);

/// Derivative of the rotated direction R(phi) n w.r.t. phi (3x3).
Mat3 rotated_direction_jacobian(const Mat3& R, const Vec3& phi, const Vec3& n);

}  // namespace mapfuse
