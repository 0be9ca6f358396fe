#pragma once

#include <map>
#include <utility>
#include <vector>

#include "mapfuse/losses.hpp"
#include "mapfuse/session.hpp"

namespace mapfuse {

/// Classical point-cloud alignment reference: robust (optionally
/// covariance-weighted and label-gated) nearest-neighbor registration over
/// overlapping submap pairs plus the same odometry term the field training
/// uses, on the same anchored pose parametrization.
struct BaselineConfig {
  int points_per_submap = 500;
  int pairs_per_submap = 3;     // top overlaps each submap keeps
  double huber_delta = 0.5;
  double match_cap_m = 2.0;     // correspondences beyond this are dropped
  bool use_covariances = true;  // plane-to-plane style local covariances
  bool semantic_match = true;   // correspondences must agree on the label
  int covariance_neighbors = 20;
  double lambda_odom = 1.0;
  Vec6 w_odom = (Vec6() << 10, 10, 10, 20, 20, 20).finished();
  double lr_translation = 1e-2;
  double lr_rotation = 1e-4;
  double grad_clip = 10.0;
  bool gauge_fix = true;
  int max_iterations = 1000;
  int patience = 100;  // stop after this many non-improving iterations
  uint64_t seed = 1;
};

struct BaselineResult {
  std::map<int, RigidTransform> poses;  // best-so-far at stop
  std::vector<double> cost_history;
  int best_iteration = -1;
  double best_cost = 0.0;
  int iterations_run = 0;
};

/// Undirected candidate pairs: each submap keeps its top overlapping
/// partners by GPS-posed AABB intersection volume (centroid distance breaks
/// ties), deduplicated.
std::vector<std::pair<int, int>> overlap_pairs(
    const std::vector<const Submap*>& submaps, int per_submap);

BaselineResult align_baseline(const SessionSet& set,
                              const BaselineConfig& cfg);

}  // namespace mapfuse
