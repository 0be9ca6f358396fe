#include "mapfuse/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace mapfuse {

double loss_sdf(const std::vector<double>& s,
                const std::vector<double>& target) {
  if (s.size() != target.size())
    throw std::invalid_argument("loss_sdf: length mismatch");
  if (s.empty()) return 0.0;
  double acc = 0.0;
  for (size_t i = 0; i < s.size(); ++i) {
    const double r = s[i] - target[i];
    acc += r * r;
  }
  return acc / double(s.size());
}

double loss_norm(const std::vector<Vec3>& n, const std::vector<Vec3>& target) {
  if (n.size() != target.size())
    throw std::invalid_argument("loss_norm: length mismatch");
  if (n.empty()) return 0.0;
  double acc = 0.0;
  for (size_t i = 0; i < n.size(); ++i) acc += (n[i] - target[i]).squaredNorm();
  return acc / double(n.size());
}

double loss_sem(const Eigen::MatrixXd& logits,
                const std::vector<uint8_t>& labels) {
  if (size_t(logits.rows()) != labels.size())
    throw std::invalid_argument("loss_sem: length mismatch");
  if (labels.empty()) return 0.0;
  const int k = int(logits.cols());
  double acc = 0.0;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= k)
      throw std::out_of_range("loss_sem: label " +
                              std::to_string(int(labels[i])) +
                              " out of range for " + std::to_string(k) +
                              " classes");
    const double mx = logits.row(i).maxCoeff();
    double z = 0.0;
    for (int c = 0; c < k; ++c) z += std::exp(logits(i, c) - mx);
    acc += std::log(z) - (logits(i, labels[i]) - mx);
  }
  return acc / double(labels.size());
}

double loss_eik(const std::vector<Vec3>& gradients) {
  if (gradients.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& g : gradients) {
    const double r = std::sqrt(g.squaredNorm() + 1e-12) - 1.0;
    acc += r * r;
  }
  return acc / double(gradients.size());
}

double loss_conf(const std::vector<double>& logit_surf,
                 const std::vector<double>& logit_space) {
  // BCE from logits: -log sigmoid(z) = log(1 + e^-z), stable form below.
  auto bce_one = [](double z) { return z > 0 ? std::log1p(std::exp(-z))
                                             : -z + std::log1p(std::exp(z)); };
  auto bce_zero = [&](double z) { return bce_one(-z); };
  double surf = 0.0, space = 0.0;
  for (double z : logit_surf) surf += bce_one(z);
  for (double z : logit_space) space += bce_zero(z);
  if (!logit_surf.empty()) surf /= double(logit_surf.size());
  if (!logit_space.empty()) space /= double(logit_space.size());
  return surf + space;
}

std::vector<OdomConstraint> odometry_constraints(const SessionSet& set) {
  std::vector<OdomConstraint> out;
  for (const auto& session : set.sessions) {
    for (size_t i = 0; i + 1 < session.submaps.size(); ++i) {
      const Submap& sm = session.submaps[i];
      if (!sm.odom_to_next) continue;
      OdomConstraint c;
      c.a = sm.id;
      c.b = session.submaps[i + 1].id;
      c.measured = *sm.odom_to_next;
      out.push_back(c);
    }
  }
  return out;
}

double loss_odom(const std::vector<OdomConstraint>& pairs,
                 const std::vector<PoseParam>& poses, const Vec6& w,
                 std::vector<Vec6>* grad) {
  if (pairs.empty()) return 0.0;
  double acc = 0.0;
  const double inv_n = 1.0 / double(pairs.size());
  for (const auto& pair : pairs) {
    const RigidTransform pa = poses[pair.a].pose();
    const RigidTransform pb = poses[pair.b].pose();
    const RigidTransform x = pair.measured.inverse().compose(
        pb.inverse().compose(pa));
    const Vec6 r = se3_log(x);
    const Vec6 wr = w.cwiseProduct(r);
    acc += wr.squaredNorm();
    if (!grad) continue;

    // r(xi_a + d) = r + Jl^-1(r) Adj(meas^-1 P_b^-1) Jl(xi_a) d;
    // the xi_b path enters with opposite sign.
    const Vec6 dldr = 2.0 * inv_n * w.cwiseProduct(wr);
    const Mat6 jl_inv_r = se3_left_jacobian_inv(r);
    const RigidTransform lead = pair.measured.inverse().compose(pb.inverse());
    const Mat6 chain = jl_inv_r * se3_adjoint(lead);
    (*grad)[pair.a] +=
        (chain * se3_left_jacobian(poses[pair.a].xi)).transpose() * dldr;
    (*grad)[pair.b] -=
        (chain * se3_left_jacobian(poses[pair.b].xi)).transpose() * dldr;
  }
  return acc * inv_n;
}

}  // namespace mapfuse
