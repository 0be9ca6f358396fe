#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <algorithm>
#include <limits>

namespace mapfuse {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat36 = Eigen::Matrix<double, 3, 6>;

/// Axis-aligned box. Empty boxes have min > max.
struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  bool empty() const { return (min.array() > max.array()).any(); }

  void expand(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }

  void expand(const Aabb& other) {
    if (other.empty()) return;
    min = min.cwiseMin(other.min);
    max = max.cwiseMax(other.max);
  }

  Aabb padded(double h) const {
    Aabb b;
    b.min = min.array() - h;
    b.max = max.array() + h;
    return b;
  }

  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }

  bool intersects(const Aabb& other) const {
    if (empty() || other.empty()) return false;
    return (min.array() <= other.max.array()).all() &&
           (max.array() >= other.min.array()).all();
  }

  /// Volume of the overlap region, 0 when disjoint.
  double intersection_volume(const Aabb& other) const {
    if (empty() || other.empty()) return 0.0;
    const Vec3 lo = min.cwiseMax(other.min);
    const Vec3 hi = max.cwiseMin(other.max);
    const Vec3 ext = (hi - lo).cwiseMax(0.0);
    return ext.x() * ext.y() * ext.z();
  }

  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
};

}  // namespace mapfuse
