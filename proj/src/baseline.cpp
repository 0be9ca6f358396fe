#include "mapfuse/baseline.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <tuple>

#include "mapfuse/adamw.hpp"
#include "mapfuse/kdtree.hpp"
#include "mapfuse/tiling.hpp"

namespace mapfuse {

std::vector<std::pair<int, int>> overlap_pairs(
    const std::vector<const Submap*>& submaps, int per_submap) {
  const int n = int(submaps.size());
  std::vector<Aabb> boxes(n);
  std::vector<Vec3> centers(n);
  for (int i = 0; i < n; ++i) {
    boxes[i] = posed_aabb(submaps[i]->aabb_local, submaps[i]->gps_pose);
    centers[i] = boxes[i].center();
  }
  std::set<std::pair<int, int>> keep;
  for (int i = 0; i < n; ++i) {
    std::vector<std::tuple<double, double, int>> cand;  // -overlap, dist, id
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double vol = boxes[i].intersection_volume(boxes[j]);
      if (vol <= 0.0) continue;
      cand.emplace_back(-vol, (centers[i] - centers[j]).norm(), j);
    }
    std::sort(cand.begin(), cand.end());
    for (int c = 0; c < std::min<int>(per_submap, int(cand.size())); ++c) {
      const int j = std::get<2>(cand[c]);
      keep.emplace(std::min(i, j), std::max(i, j));
    }
  }
  return {keep.begin(), keep.end()};
}

namespace {

struct Cloud {
  std::vector<Vec3> local;
  std::vector<uint8_t> labels;
  std::vector<Mat3> cov;  // local-frame, disk-flattened; empty when unused
};

/// Neighborhood covariance with eigenvalues flattened to (1e-3, 1, 1):
/// direction matters, raw extent does not.
Mat3 flattened_covariance(const std::vector<Vec3>& pts,
                          const std::vector<int>& nbrs) {
  Vec3 mean = Vec3::Zero();
  for (int i : nbrs) mean += pts[i];
  mean /= double(nbrs.size());
  Mat3 c = Mat3::Zero();
  for (int i : nbrs) {
    const Vec3 d = pts[i] - mean;
    c += d * d.transpose();
  }
  c /= double(nbrs.size());
  Eigen::SelfAdjointEigenSolver<Mat3> es(c);  // ascending eigenvalues
  const Mat3 v = es.eigenvectors();
  return v * Vec3(1e-3, 1.0, 1.0).asDiagonal() * v.transpose();
}

struct MatchAccum {
  double cost = 0.0;
  size_t count = 0;
  std::vector<Vec6> grad;
};

/// One direction of a pair: source points matched into the target's trees.
void accumulate_matches(const BaselineConfig& cfg, int src_id, int dst_id,
                        const Cloud& src, const Cloud& dst,
                        const std::vector<Vec3>& src_world,
                        const std::vector<Vec3>& dst_world,
                        const std::vector<KdTree>& dst_trees,
                        const std::vector<std::vector<int>>& dst_index,
                        const RigidTransform& T_src,
                        const RigidTransform& T_dst, const Mat6& jl_src,
                        const Mat6& jl_dst, MatchAccum& acc) {
  const double cap2 = cfg.match_cap_m * cfg.match_cap_m;
  for (size_t i = 0; i < src_world.size(); ++i) {
    const int tree_id = cfg.semantic_match ? src.labels[i] : 0;
    if (tree_id >= int(dst_trees.size())) continue;
    const KdTree& tree = dst_trees[tree_id];
    if (tree.size() == 0) continue;
    double d2 = 0.0;
    const int hit = tree.nearest(src_world[i], &d2);
    if (hit < 0 || d2 > cap2) continue;
    const int j = dst_index[tree_id][hit];

    const Vec3 r = src_world[i] - dst_world[j];
    Mat3 w = Mat3::Identity();
    if (cfg.use_covariances) {
      const Mat3 m = T_src.R * src.cov[i] * T_src.R.transpose() +
                     T_dst.R * dst.cov[j] * T_dst.R.transpose();
      w = m.inverse();
    }
    const double e2 = std::max(0.0, r.dot(w * r));
    const double s = std::sqrt(e2);
    const double d = cfg.huber_delta;
    acc.cost += s <= d ? e2 : 2.0 * d * s - d * d;
    ++acc.count;
    if (s < 1e-12) continue;
    const double drho = s <= d ? 2.0 * s : 2.0 * d;
    const Vec3 dr = (drho / s) * (w * r);

    Mat36 j_src, j_dst;
    j_src << Mat3::Identity(), -skew(src_world[i]);
    j_dst << Mat3::Identity(), -skew(dst_world[j]);
    acc.grad[src_id] += (j_src * jl_src).transpose() * dr;
    acc.grad[dst_id] -= (j_dst * jl_dst).transpose() * dr;
  }
}

}  // namespace

BaselineResult align_baseline(const SessionSet& set,
                              const BaselineConfig& cfg) {
  const std::vector<const Submap*> submaps = set.all_submaps();
  const int n = int(submaps.size());
  if (n == 0) throw std::runtime_error("align_baseline: no submaps");

  std::vector<PoseParam> poses(n);
  for (int i = 0; i < n; ++i) {
    poses[i].anchor = submaps[i]->gps_pose;
    poses[i].xi.setZero();
  }
  const auto pairs = overlap_pairs(submaps, cfg.pairs_per_submap);
  const auto odom = odometry_constraints(set);

  if (cfg.semantic_match && set.class_count <= 0)
    throw std::runtime_error(
        "align_baseline: semantic matching needs a positive class count");
  const int label_slots = cfg.semantic_match ? set.class_count : 1;
  std::vector<Cloud> clouds(n);
  for (int i = 0; i < n; ++i) {
    Rng rng(mix_seed(cfg.seed, 0xBA5Eu, uint64_t(i)));
    Cloud& c = clouds[i];
    for (const SurfaceSample& s :
         sample_surface(submaps[i]->mesh, size_t(cfg.points_per_submap), rng)) {
      c.local.push_back(s.point);
      c.labels.push_back(s.label);
    }
    if (cfg.use_covariances) {
      const KdTree tree(c.local);
      c.cov.reserve(c.local.size());
      for (const Vec3& p : c.local)
        c.cov.push_back(flattened_covariance(
            c.local, tree.knearest(p, cfg.covariance_neighbors)));
    }
  }

  AdamW<double> opt_rho(size_t(3 * n), 1), opt_phi(size_t(3 * n), 1);
  const AdamWConfig rho_cfg{cfg.lr_translation, 0.0};
  const AdamWConfig phi_cfg{cfg.lr_rotation, 0.0};

  BaselineResult res;
  std::vector<Vec6> best_xi(n, Vec6::Zero());
  double best = std::numeric_limits<double>::infinity();

  for (int it = 0; it < cfg.max_iterations; ++it) {
    std::vector<RigidTransform> T(n);
    std::vector<Mat6> jl(n);
    for (int i = 0; i < n; ++i) {
      T[i] = poses[i].pose();
      jl[i] = se3_left_jacobian(poses[i].xi);
    }

    MatchAccum acc;
    acc.grad.assign(n, Vec6::Zero());
    for (const auto& [a, b] : pairs) {
      std::vector<Vec3> aw(clouds[a].local.size()), bw(clouds[b].local.size());
      for (size_t i = 0; i < aw.size(); ++i) aw[i] = T[a].apply(clouds[a].local[i]);
      for (size_t i = 0; i < bw.size(); ++i) bw[i] = T[b].apply(clouds[b].local[i]);

      // per-label trees (single slot 0 when labels are ignored)
      std::vector<std::vector<int>> ai(label_slots), bi(label_slots);
      std::vector<std::vector<Vec3>> ap(label_slots), bp(label_slots);
      for (size_t i = 0; i < aw.size(); ++i) {
        const int l = cfg.semantic_match ? clouds[a].labels[i] : 0;
        ai[l].push_back(int(i));
        ap[l].push_back(aw[i]);
      }
      for (size_t i = 0; i < bw.size(); ++i) {
        const int l = cfg.semantic_match ? clouds[b].labels[i] : 0;
        bi[l].push_back(int(i));
        bp[l].push_back(bw[i]);
      }
      std::vector<KdTree> at(label_slots), bt(label_slots);
      for (int l = 0; l < label_slots; ++l) {
        at[l] = KdTree(ap[l]);
        bt[l] = KdTree(bp[l]);
      }
      accumulate_matches(cfg, a, b, clouds[a], clouds[b], aw, bw, bt, bi,
                         T[a], T[b], jl[a], jl[b], acc);
      accumulate_matches(cfg, b, a, clouds[b], clouds[a], bw, aw, at, ai,
                         T[b], T[a], jl[b], jl[a], acc);
    }

    double total = 0.0;
    std::vector<Vec6> grad(n, Vec6::Zero());
    if (acc.count > 0) {
      total += acc.cost / double(acc.count);
      for (int i = 0; i < n; ++i) grad[i] = acc.grad[i] / double(acc.count);
    }
    if (!odom.empty()) {
      std::vector<Vec6> ograd(n, Vec6::Zero());
      total += cfg.lambda_odom * loss_odom(odom, poses, cfg.w_odom, &ograd);
      for (int i = 0; i < n; ++i) grad[i] += cfg.lambda_odom * ograd[i];
    }
    res.cost_history.push_back(total);
    res.iterations_run = it + 1;

    if (total < best) {
      best = total;
      res.best_iteration = it;
      for (int i = 0; i < n; ++i) best_xi[i] = poses[i].xi;
    } else if (it - res.best_iteration >= cfg.patience) {
      break;  // diverged or stalled; keep the best snapshot
    }

    if (cfg.gauge_fix) grad[0].setZero();
    std::vector<double> rho(3 * n), phi(3 * n), grho(3 * n), gphi(3 * n);
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < 3; ++a) {
        rho[3 * i + a] = poses[i].xi[a];
        phi[3 * i + a] = poses[i].xi[3 + a];
        grho[3 * i + a] = grad[i][a];
        gphi[3 * i + a] = grad[i][3 + a];
      }
    clip_global_norm(grho.data(), grho.size(), cfg.grad_clip);
    clip_global_norm(gphi.data(), gphi.size(), cfg.grad_clip);
    opt_rho.update_dense(rho.data(), grho.data(), rho_cfg);
    opt_phi.update_dense(phi.data(), gphi.data(), phi_cfg);
    for (int i = 0; i < n; ++i) {
      if (cfg.gauge_fix && i == 0) continue;
      for (int a = 0; a < 3; ++a) {
        poses[i].xi[a] = rho[3 * i + a];
        poses[i].xi[3 + a] = phi[3 * i + a];
      }
    }
  }

  res.best_cost = best;
  for (int i = 0; i < n; ++i) {
    PoseParam p{best_xi[i], poses[i].anchor};
    res.poses[submaps[i]->id] = p.pose();
  }
  return res;
}

}  // namespace mapfuse
