#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mapfuse/sampler.hpp"
#include "mapfuse/se3.hpp"

namespace mapfuse {

struct LossWeights {
  double norm = 1.0;
  double sem = 1.0;
  double conf = 1.0;
  double odom = 1.0;
  double eik = 0.1;
  Vec6 w_odom = (Vec6() << 10, 10, 10, 20, 20, 20).finished();
};

/// Per-term means (unweighted) plus the weighted total.
struct LossReport {
  double sdf = 0, norm = 0, sem = 0, eik = 0, conf = 0, odom = 0;
  double total = 0;
  int n_surf = 0, n_space = 0, n_pairs = 0;
  int64_t iteration = -1;
  int tile = -1;

  double weighted_total(const LossWeights& w) const {
    return sdf + w.norm * norm + w.sem * sem + w.eik * eik + w.conf * conf +
           w.odom * odom;
  }
};

// --- elementary terms (batched wrappers; the trainer fuses these loops) ---

double loss_sdf(const std::vector<double>& s, const std::vector<double>& target);
double loss_norm(const std::vector<Vec3>& n, const std::vector<Vec3>& target);
double loss_sem(const Eigen::MatrixXd& logits, const std::vector<uint8_t>& labels);
double loss_eik(const std::vector<Vec3>& gradients);
/// Both arguments are confidence LOGITS; targets are 1 at surface, 0 in space.
double loss_conf(const std::vector<double>& logit_surf,
                 const std::vector<double>& logit_space);

// --- odometry term ---

struct OdomConstraint {
  int a = -1, b = -1;        // consecutive submaps of one session (a -> b)
  RigidTransform measured;   // measured a-to-b relative pose (P_b^-1 P_a)^
};

/// Consecutive-pair constraints from a session set, in global-id order.
std::vector<OdomConstraint> odometry_constraints(const SessionSet& set);

/// Mean over pairs of || w (.) log(meas^-1 P_b^-1 P_a) ||^2 with
/// P = exp(xi) * anchor. When grad is non-null, d loss / d xi accumulates
/// into (*grad)[id] for every pose touched.
double loss_odom(const std::vector<OdomConstraint>& pairs,
                 const std::vector<PoseParam>& poses, const Vec6& w,
                 std::vector<Vec6>* grad = nullptr);

}  // namespace mapfuse
