#include "mapfuse/se3.hpp"

#include <Eigen/Geometry>
#include <cmath>

namespace mapfuse {

namespace {

constexpr double kSmallAngle = 1e-6;

// Taylor-backed coefficient helpers, theta = |phi|.
// a1 = sin(t)/t, a2 = (1-cos(t))/t^2, a3 = (t-sin(t))/t^3
double coeff_a1(double t) {
  if (t < kSmallAngle) return 1.0 - t * t / 6.0;
  return std::sin(t) / t;
}
double coeff_a2(double t) {
  if (t < kSmallAngle) return 0.5 - t * t / 24.0;
  // (1 - cos t)/t^2 without the 1-cos cancellation.
  const double s = std::sin(0.5 * t) / t;
  return 2.0 * s * s;
}
double coeff_a3(double t) {
  if (t < kSmallAngle) return 1.0 / 6.0 - t * t / 120.0;
  return (t - std::sin(t)) / (t * t * t);
}

}  // namespace

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

Mat3 so3_exp(const Vec3& phi) {
  const double t = phi.norm();
  const Mat3 W = skew(phi);
  return Mat3::Identity() + coeff_a1(t) * W + coeff_a2(t) * W * W;
}

Vec3 so3_log(const Mat3& R) {
  Eigen::AngleAxisd aa(R);
  double angle = aa.angle();
  Vec3 axis = aa.axis();
  if (angle > M_PI) {  // AngleAxis returns angle in [0, pi]; guard anyway
    angle = 2.0 * M_PI - angle;
    axis = -axis;
  }
  if (angle >= M_PI - 1e-6) {
    throw Se3LogAmbiguity("so3_log: rotation angle within 1e-6 of pi");
  }
  return angle * axis;
}

Mat3 so3_left_jacobian(const Vec3& phi) {
  const double t = phi.norm();
  const Mat3 W = skew(phi);
  return Mat3::Identity() + coeff_a2(t) * W + coeff_a3(t) * W * W;
}

Mat3 so3_left_jacobian_inv(const Vec3& phi) {
  const double t = phi.norm();
  const Mat3 W = skew(phi);
  double c;
  if (t < 1e-4) {
    const double t2 = t * t;
    c = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  } else {
    // 1 - 0.5 t sin(t)/(1-cos(t)) == 1 - 0.5 t cot(t/2); the half-angle form
    // avoids the 1-cos cancellation that wrecks precision for small t.
    const double half = 0.5 * t;
    c = (1.0 - half * std::cos(half) / std::sin(half)) / (t * t);
  }
  return Mat3::Identity() - 0.5 * W + c * W * W;
}

RigidTransform se3_exp(const Vec6& xi) {
  const Vec3 rho = se3_rho(xi);
  const Vec3 phi = se3_phi(xi);
  RigidTransform T;
  T.R = so3_exp(phi);
  T.t = so3_left_jacobian(phi) * rho;
  return T;
}

Vec6 se3_log(const RigidTransform& T) {
  const Vec3 phi = so3_log(T.R);
  Vec6 xi;
  xi.head<3>() = so3_left_jacobian_inv(phi) * T.t;
  xi.tail<3>() = phi;
  return xi;
}

Mat3 se3_q_matrix(const Vec3& rho, const Vec3& phi) {
  const double t = phi.norm();
  const Mat3 P = skew(phi);
  const Mat3 Rho = skew(rho);
  const Mat3 PR = P * Rho;
  const Mat3 RP = Rho * P;
  const Mat3 PRP = PR * P;

  const double a3 = coeff_a3(t);
  // b3 = (t^2 + 2 cos t - 2)/(2 t^4), b4 = (2t - 3 sin t + t cos t)/(2 t^5);
  // series below the cutoff where the closed forms cancel catastrophically.
  double b3, b4;
  const double t2 = t * t;
  if (t < 1e-2) {
    b3 = 1.0 / 24.0 - t2 / 720.0 + t2 * t2 / 40320.0;
    b4 = 1.0 / 120.0 - t2 / 2520.0 + t2 * t2 / 120960.0;
  } else {
    b3 = (t2 + 2.0 * std::cos(t) - 2.0) / (2.0 * t2 * t2);
    b4 = (2.0 * t - 3.0 * std::sin(t) + t * std::cos(t)) / (2.0 * t2 * t2 * t);
  }

  return 0.5 * Rho + a3 * (PR + RP + PRP) + b3 * (P * PR + RP * P - 3.0 * PRP) +
         b4 * (PRP * P + P * PRP);
}

Mat6 se3_left_jacobian(const Vec6& xi) {
  const Vec3 rho = se3_rho(xi);
  const Vec3 phi = se3_phi(xi);
  const Mat3 J = so3_left_jacobian(phi);
  const Mat3 Q = se3_q_matrix(rho, phi);
  Mat6 out = Mat6::Zero();
  out.topLeftCorner<3, 3>() = J;
  out.topRightCorner<3, 3>() = Q;
  out.bottomRightCorner<3, 3>() = J;
  return out;
}

Mat6 se3_left_jacobian_inv(const Vec6& xi) {
  const Vec3 rho = se3_rho(xi);
  const Vec3 phi = se3_phi(xi);
  const Mat3 Jinv = so3_left_jacobian_inv(phi);
  const Mat3 Q = se3_q_matrix(rho, phi);
  Mat6 out = Mat6::Zero();
  out.topLeftCorner<3, 3>() = Jinv;
  out.topRightCorner<3, 3>() = -Jinv * Q * Jinv;
  out.bottomRightCorner<3, 3>() = Jinv;
  return out;
}

Mat6 se3_adjoint(const RigidTransform& T) {
  Mat6 out = Mat6::Zero();
  out.topLeftCorner<3, 3>() = T.R;
  out.topRightCorner<3, 3>() = skew(T.t) * T.R;
  out.bottomRightCorner<3, 3>() = T.R;
  return out;
}

Vec3 transform_point(const Vec6& xi, const Vec3& p, Mat36* jacobian) {
  const RigidTransform T = se3_exp(xi);
  const Vec3 out = T.apply(p);
  if (jacobian) {
    Eigen::Matrix<double, 3, 6> lift;
    lift.leftCols<3>() = Mat3::Identity();
    lift.rightCols<3>() = -skew(out);
    *jacobian = lift * se3_left_jacobian(xi);
  }
  return out;
}

Mat3 rotated_direction_jacobian(const Mat3& R, const Vec3& phi, const Vec3& n) {
  // R(phi + d) n = exp(skew(Jl d)) R n, so the derivative is -skew(R n) Jl.
  return -skew(R * n) * so3_left_jacobian(phi);
}

}  // namespace mapfuse
