#include <cmath>

#include "doctest.h"
#include "mapfuse/losses.hpp"
#include "mapfuse/rng.hpp"
#include "mapfuse/se3.hpp"

using namespace mapfuse;

namespace {

Vec6 random_xi(Rng& rng, double rot_scale = 1.0) {
  Vec6 xi;
  for (int i = 0; i < 3; ++i) xi[i] = rng.uniform(-2.0, 2.0);
  // Rotation magnitude capped by rot_scale so log(exp(.)) stays unambiguous.
  xi.tail<3>() = rng.normal3(1.0).normalized() * rng.uniform(0.0, rot_scale);
  return xi;
}

Mat3 rodrigues(const Vec3& phi) {
  const double th = phi.norm();
  if (th < 1e-15) return Mat3::Identity();
  const Vec3 a = phi / th;
  const Mat3 K = skew(a);
  return Mat3::Identity() + std::sin(th) * K + (1.0 - std::cos(th)) * K * K;
}

}  // namespace

TEST_CASE("se3 exp basics") {
  const RigidTransform id = se3_exp(Vec6::Zero());
  CHECK((id.R - Mat3::Identity()).norm() == 0.0);
  CHECK(id.t.norm() == 0.0);

  Vec6 trans;
  trans << 1, 2, 3, 0, 0, 0;
  const RigidTransform T = se3_exp(trans);
  CHECK((T.R - Mat3::Identity()).norm() < 1e-14);
  CHECK((T.t - Vec3(1, 2, 3)).norm() < 1e-14);

  Vec6 rot;
  rot << 0, 0, 0, 0, 0, M_PI / 2;
  const Vec3 p = se3_exp(rot).apply(Vec3(1, 0, 0));
  CHECK((p - Vec3(0, 1, 0)).norm() < 1e-9);
}

TEST_CASE("so3 exp matches Rodrigues oracle") {
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    Vec3 phi = rng.normal3(1.0) * rng.uniform(0.0, 2.5);
    CHECK((so3_exp(phi) - rodrigues(phi)).norm() < 1e-12);
  }
}

TEST_CASE("exp/log roundtrip") {
  CHECK(se3_log(RigidTransform{}).norm() == 0.0);

  Vec6 xi;
  xi << 0.1, 0, 0, 0, 0.2, 0;
  CHECK((se3_log(se3_exp(xi)) - xi).norm() < 1e-8);

  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    const Vec6 x = random_xi(rng, 2.8);
    CHECK((se3_log(se3_exp(x)) - x).norm() < 1e-8);
  }

  // Near pi the angle must still match the trace formula.
  const Vec3 phi = (M_PI - 1e-4) * Vec3(0, 0, 1);
  const Mat3 R = so3_exp(phi);
  const Vec3 back = so3_log(R);
  CHECK(back.norm() ==
        doctest::Approx(std::acos((R.trace() - 1.0) / 2.0)).epsilon(1e-6));
  CHECK((back - phi).norm() < 1e-6);

  CHECK_THROWS_AS(so3_log(so3_exp(Vec3(M_PI - 1e-8, 0, 0))), Se3LogAmbiguity);
}

TEST_CASE("transform_point and its Jacobian") {
  Vec6 zero = Vec6::Zero();
  CHECK((transform_point(zero, Vec3(5, 5, 0)) - Vec3(5, 5, 0)).norm() == 0.0);

  Vec6 tr = Vec6::Zero();
  tr[0] = 1.0;
  Mat36 jac;
  const Vec3 p0 = transform_point(tr, Vec3::Zero(), &jac);
  CHECK((p0 - Vec3(1, 0, 0)).norm() < 1e-12);
  CHECK((jac.leftCols<3>() - Mat3::Identity()).norm() < 1e-9);

  Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const Vec6 xi = random_xi(rng, 1.5);
    const Vec3 p = rng.normal3(1.0) * 3.0;
    const double h = 1e-6;
    transform_point(xi, p, &jac);
    for (int d = 0; d < 6; ++d) {
      Vec6 hi = xi, lo = xi;
      hi[d] += h;
      lo[d] -= h;
      const Vec3 fd = (transform_point(hi, p) - transform_point(lo, p)) / (2 * h);
      const double scale = std::max(1.0, fd.norm());
      CHECK((jac.col(d) - fd).norm() / scale < 1e-5);
    }
  }
}

TEST_CASE("left Jacobian identities") {
  Rng rng(14);
  for (int trial = 0; trial < 25; ++trial) {
    const Vec6 xi = random_xi(rng, 1.8);
    const Mat6 J = se3_left_jacobian(xi);
    CHECK((se3_left_jacobian_inv(xi) * J - Mat6::Identity()).norm() < 1e-9);

    // exp(xi + h e_d) = exp(J_l(xi) h e_d) * exp(xi) + O(h^2)
    const RigidTransform T = se3_exp(xi);
    const double h = 1e-6;
    for (int d = 0; d < 6; ++d) {
      Vec6 hi = xi, lo = xi;
      hi[d] += h;
      lo[d] -= h;
      const Vec6 fd =
          (se3_log(se3_exp(hi).compose(T.inverse())) -
           se3_log(se3_exp(lo).compose(T.inverse()))) /
          (2 * h);
      CHECK((J.col(d) - fd).norm() < 1e-5 * std::max(1.0, J.col(d).norm()));
    }
  }

  // SO(3) left Jacobian against its series at small angle.
  const Vec3 tiny(1e-5, -2e-5, 3e-6);
  const Mat3 series = Mat3::Identity() + 0.5 * skew(tiny);
  CHECK((so3_left_jacobian(tiny) - series).norm() < 1e-9);
}

TEST_CASE("adjoint identity") {
  Rng rng(15);
  for (int trial = 0; trial < 25; ++trial) {
    const RigidTransform T = se3_exp(random_xi(rng, 1.5));
    const Vec6 xi = random_xi(rng, 0.3) * 1e-4;
    const Vec6 lhs = se3_log(T.compose(se3_exp(xi)).compose(T.inverse()));
    const Vec6 rhs = se3_adjoint(T) * xi;
    CHECK((lhs - rhs).norm() < 1e-10);
  }
}

TEST_CASE("rotated direction Jacobian") {
  Rng rng(16);
  for (int trial = 0; trial < 25; ++trial) {
    const Vec3 phi = rng.normal3(1.0) * 0.8;
    Vec3 n = rng.normal3(1.0);
    n.normalize();
    const Mat3 R = so3_exp(phi);
    const Mat3 J = rotated_direction_jacobian(R, phi, n);
    const double h = 1e-6;
    for (int d = 0; d < 3; ++d) {
      Vec3 hi = phi, lo = phi;
      hi[d] += h;
      lo[d] -= h;
      const Vec3 fd = (so3_exp(hi) * n - so3_exp(lo) * n) / (2 * h);
      CHECK((J.col(d) - fd).norm() < 1e-5);
    }
  }
}

TEST_CASE("odometry loss values") {
  // Chain consistent with its measurements -> zero.
  Rng rng(17);
  std::vector<PoseParam> poses(3);
  poses[0].anchor = se3_exp(random_xi(rng, 1.0));
  poses[1].anchor = se3_exp(random_xi(rng, 1.0));
  poses[2].anchor = se3_exp(random_xi(rng, 1.0));
  std::vector<OdomConstraint> pairs;
  for (int i = 0; i + 1 < 3; ++i) {
    OdomConstraint c;
    c.a = i;
    c.b = i + 1;
    c.measured = poses[i + 1].pose().inverse().compose(poses[i].pose());
    pairs.push_back(c);
  }
  const Vec6 w = Vec6::Ones();
  CHECK(loss_odom(pairs, poses, w) < 1e-18);

  // Identity odometry, second pose 1 m off -> mean ||log||^2 = 1.
  std::vector<PoseParam> two(2);
  two[1].anchor.t = Vec3(1, 0, 0);
  std::vector<OdomConstraint> one(1);
  one[0].a = 0;
  one[0].b = 1;
  CHECK(loss_odom(one, two, w) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("odometry loss gradient vs finite differences") {
  Rng rng(18);
  std::vector<PoseParam> poses(3);
  for (auto& p : poses) {
    p.anchor = se3_exp(random_xi(rng, 0.8));
    p.xi = random_xi(rng, 0.3) * 0.1;
  }
  std::vector<OdomConstraint> pairs(2);
  pairs[0] = {0, 1, se3_exp(random_xi(rng, 0.5))};
  pairs[1] = {1, 2, se3_exp(random_xi(rng, 0.5))};
  Vec6 w;
  w << 10, 10, 10, 20, 20, 20;

  std::vector<Vec6> grad(3, Vec6::Zero());
  loss_odom(pairs, poses, w, &grad);

  const double h = 1e-6;
  for (int i = 0; i < 3; ++i) {
    for (int d = 0; d < 6; ++d) {
      auto perturbed = poses;
      perturbed[i].xi[d] += h;
      const double hi = loss_odom(pairs, perturbed, w);
      perturbed[i].xi[d] -= 2 * h;
      const double lo = loss_odom(pairs, perturbed, w);
      const double fd = (hi - lo) / (2 * h);
      CHECK(grad[i][d] ==
            doctest::Approx(fd).epsilon(1e-4).scale(std::max(1.0, std::abs(fd))));
    }
  }
}

TEST_CASE("odometry loss gauge invariance") {
  Rng rng(19);
  std::vector<PoseParam> poses(4);
  for (auto& p : poses) {
    p.anchor = se3_exp(random_xi(rng, 0.9));
    p.xi = random_xi(rng, 0.2) * 0.3;
  }
  std::vector<OdomConstraint> pairs;
  for (int i = 0; i + 1 < 4; ++i)
    pairs.push_back({i, i + 1, se3_exp(random_xi(rng, 0.4))});
  Vec6 w;
  w << 10, 10, 10, 20, 20, 20;
  const double base = loss_odom(pairs, poses, w);

  const RigidTransform G = se3_exp(random_xi(rng, 1.2));
  auto moved = poses;
  for (auto& p : moved) {
    // G * exp(xi) * A = exp(Adj(G) xi) * (G A): same xi story, shifted gauge.
    p.anchor = G.compose(p.anchor);
    p.xi = se3_adjoint(G) * p.xi;
  }
  CHECK(std::abs(loss_odom(pairs, moved, w) - base) < 1e-9 * std::max(1.0, base));
}
