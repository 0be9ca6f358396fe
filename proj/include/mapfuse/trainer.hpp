#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "mapfuse/adamw.hpp"
#include "mapfuse/field.hpp"
#include "mapfuse/losses.hpp"
#include "mapfuse/sampler.hpp"
#include "mapfuse/session.hpp"
#include "mapfuse/tiling.hpp"

namespace mapfuse {

/// Everything the optimization loop needs to know, with defaults matching
/// the reference operating point (tile side 128 m, 16-level hash grid,
/// 2x128 heads, AdamW 1e-2/1e-2 with 10^(-0.001 it / #tiles) decay, pose
/// learning rates 1e-2 / 1e-4, 500 iterations per tile).
struct TrainSetup {
  double tile_side_m = 128.0;
  double tile_halo_m = 8.0;
  GridVariant grid_variant = GridVariant::kHash;
  HashGridConfig hash;
  OctreeConfig octree;
  PosEncConfig posenc;
  int head_hidden = 128;
  LossWeights weights;
  double sigma_s_m = 0.05;
  int batch_surface = 8192;  // free-space count matches
  int iters_per_tile = 500;
  int lod_period = 50;  // per-tile iterations per extra level
  double lr_field = 1e-2;
  double wd_field = 1e-2;
  double lr_translation = 1e-2;
  double lr_rotation = 1e-4;
  double pose_clip = 10.0;
  bool gauge_fix = true;  // freeze the first pose of the first session
  bool freeze_poses = false;
  bool freeze_field = false;
  uint64_t seed = 1;
};

template <class Scalar>
struct FusionModel {
  TrainSetup setup;
  std::vector<const Submap*> submaps;  // by global id, borrowed
  Tiling tiling;
  std::vector<TileNorm> norms;              // per tile
  std::vector<FeatureGrid<Scalar>> grids;   // per tile
  FieldHeads<Scalar> heads;
  std::vector<PoseParam> poses;  // by global id
  std::vector<OdomConstraint> odom;

  RigidTransform pose(int id) const { return poses[id].pose(); }
  std::map<int, RigidTransform> pose_map() const {
    std::map<int, RigidTransform> m;
    for (size_t i = 0; i < poses.size(); ++i) m[int(i)] = poses[i].pose();
    return m;
  }
};

/// Assembles tiling, per-tile grids (octree allocation uses GPS-posed mesh
/// vertices), shared heads, and pose parameters anchored at GPS (or at
/// `init_poses` when given).
template <class Scalar>
FusionModel<Scalar> build_model(
    const SessionSet& set, const TrainSetup& setup,
    const std::map<int, RigidTransform>* init_poses = nullptr) {
  FusionModel<Scalar> model;
  model.setup = setup;
  model.submaps = set.all_submaps();
  model.odom = odometry_constraints(set);

  model.poses.resize(model.submaps.size());
  for (size_t i = 0; i < model.submaps.size(); ++i) {
    const Submap* sm = model.submaps[i];
    RigidTransform anchor = sm->gps_pose;
    if (init_poses) {
      const auto it = init_poses->find(sm->id);
      if (it == init_poses->end())
        throw std::runtime_error("init poses missing submap " +
                                 std::to_string(sm->id));
      anchor = it->second;
    }
    model.poses[i].anchor = anchor;
    model.poses[i].xi.setZero();
  }

  model.tiling =
      assign_tiles(model.submaps, setup.tile_side_m, setup.tile_halo_m);
  const int n_tiles = int(model.tiling.tiles.size());
  model.norms.reserve(n_tiles);
  model.grids.reserve(n_tiles);
  for (int t = 0; t < n_tiles; ++t) {
    const TileNorm norm =
        make_tile_norm(model.tiling.tile_box(t), setup.tile_side_m);
    model.norms.push_back(norm);
    Rng grid_rng(mix_seed(setup.seed, 0xF0A7u, uint64_t(t)));
    if (setup.grid_variant == GridVariant::kHash) {
      model.grids.push_back(make_hash_grid<Scalar>(setup.hash, grid_rng));
    } else {
      std::vector<Vec3> pts;
      for (int id : model.tiling.tiles[t].submap_ids) {
        const Submap* sm = model.submaps[id];
        for (const Vec3& v : sm->mesh.vertices) {
          const Vec3 u = norm.to_unit(model.poses[id].anchor.apply(v));
          if (u.x() < -0.02 || u.y() < -0.02 || u.z() < -0.02 ||
              u.x() > 1.02 || u.y() > 1.02 || u.z() > 1.02)
            continue;
          pts.push_back(u.cwiseMax(0.0).cwiseMin(1.0));
        }
      }
      model.grids.push_back(
          make_octree_grid<Scalar>(setup.octree, norm.span, pts, grid_rng));
    }
  }

  const int grid_dim = model.grids.empty() ? 0 : model.grids[0].out_dim();
  Rng head_rng(mix_seed(setup.seed, 0x4EADu, 0));
  model.heads = make_heads<Scalar>(grid_dim, set.class_count,
                                   setup.head_hidden, setup.posenc, head_rng);
  return model;
}

/// Head/grid/pose gradients of one iteration's total loss, densified for
/// finite-difference verification on small configurations.
struct GradSnapshot {
  std::vector<double> geo, sem;
  std::vector<std::vector<double>> grid;  // per tile
  std::vector<Vec6> pose;
};

template <class Scalar>
class Trainer {
 public:
  explicit Trainer(FusionModel<Scalar>& model)
      : model_(model), setup_(model.setup) {
    const int n_tiles = int(model_.tiling.tiles.size());
    if (n_tiles == 0) throw std::runtime_error("no occupied tiles to train");
    tile_iters_.assign(n_tiles, 0);
    grid_grads_.resize(n_tiles);
    opt_grid_.resize(n_tiles);
    for (int t = 0; t < n_tiles; ++t)
      opt_grid_[t].init(model_.grids[t].params.size(),
                        model_.grids[t].feature_dim);
    opt_geo_.init(model_.heads.geo.param_count(), 1);
    opt_sem_.init(model_.heads.sem.param_count(), 1);
    const size_t n_poses = model_.poses.size();
    opt_rho_.init(3 * n_poses, 1);
    opt_phi_.init(3 * n_poses, 1);
    geo_grad_.assign(model_.heads.geo.param_count(), Scalar(0));
    sem_grad_.assign(model_.heads.sem.param_count(), Scalar(0));
  }

  int64_t default_total_iterations() const {
    return int64_t(setup_.iters_per_tile) * int64_t(tile_iters_.size());
  }

  LossReport evaluate(int64_t iteration) {
    return iteration_pass(iteration, false, nullptr, false);
  }
  LossReport compute_gradients(int64_t iteration, GradSnapshot* snap) {
    return iteration_pass(iteration, true, snap, false);
  }
  LossReport step(int64_t iteration) {
    return iteration_pass(iteration, true, nullptr, true);
  }

  void run(int64_t total_iterations, std::vector<LossReport>* history,
           const std::function<void(const LossReport&)>& on_log = nullptr,
           int log_every = 0) {
    for (int64_t it = 0; it < total_iterations; ++it) {
      const LossReport report = step(it);
      if (history) history->push_back(report);
      if (on_log && log_every > 0 &&
          (it % log_every == 0 || it + 1 == total_iterations))
        on_log(report);
    }
  }

  int pick_tile(int64_t iteration) const {
    Rng rng(mix_seed(setup_.seed, 0x7e17eu, uint64_t(iteration)));
    return int(rng.index(tile_iters_.size()));
  }

 private:
  using MatS = MatX<Scalar>;

  LossReport iteration_pass(int64_t it, bool want_grads, GradSnapshot* snap,
                            bool apply) {
    const int tile = pick_tile(it);
    const TileAssignment& assignment = model_.tiling.tiles[tile];
    FeatureGrid<Scalar>& grid = model_.grids[tile];
    const TileNorm& norm = model_.norms[tile];
    const int n_tiles = int(tile_iters_.size());

    grid.active_levels = lod_schedule(grid.level_count(), tile_iters_[tile],
                                      setup_.lod_period);
    const double eps_world = norm.span / (2.0 * grid.finest_active_scale());

    LossReport report;
    report.iteration = it;
    report.tile = tile;

    Rng batch_rng(mix_seed(setup_.seed, uint64_t(it) + 1, uint64_t(tile)));
    const SampleBatch batch =
        sample_batch(assignment, model_.submaps, setup_.batch_surface,
                     setup_.sigma_s_m, batch_rng);
    PosedBatch posed = pose_batch(batch, model_.poses);

    // Keep only points that land in this tile (halo members contribute the
    // in-tile portion of their geometry).
    std::vector<PosedSurface> surf;
    std::vector<PosedSpace> space;
    surf.reserve(posed.surface.size());
    space.reserve(posed.space.size());
    for (auto& s : posed.surface)
      if (model_.tiling.point_tile(s.pos) == assignment.tile)
        surf.push_back(s);
    for (auto& s : posed.space)
      if (model_.tiling.point_tile(s.pos) == assignment.tile)
        space.push_back(s);

    const int n_s = int(surf.size());
    const int n_p = int(space.size());
    report.n_surf = n_s;
    report.n_space = n_p;
    if (n_s == 0 && n_p == 0) {  // zero-area tile: skip this iteration
      if (apply) ++tile_iters_[tile];
      return report;
    }

    // Row layout: [surface mains | surface stencils | space mains | space
    // stencils]; stencil rows of sample k sit at base + 6k + 2*axis + (0 for
    // +eps, 1 for -eps).
    const int base_ss = n_s;
    const int base_pm = 7 * n_s;
    const int base_ps = 7 * n_s + n_p;
    const int rows = 7 * (n_s + n_p);

    MatS P(rows, 3);
    std::vector<uint8_t> clamp_mask(rows, 0);
    const double inv_span = 1.0 / norm.span;
    auto put_row = [&](int row, const Vec3& world) {
      const Vec3 u = norm.to_unit(world);
      for (int a = 0; a < 3; ++a) {
        double v = u[a];
        if (v < 0.0 || v > 1.0) {
          clamp_mask[row] |= uint8_t(1u << a);
          v = std::clamp(v, 0.0, 1.0);
        }
        P(row, a) = Scalar(v);
      }
    };
    for (int k = 0; k < n_s; ++k) {
      put_row(k, surf[k].pos);
      for (int a = 0; a < 3; ++a) {
        Vec3 hi = surf[k].pos, lo = surf[k].pos;
        hi[a] += eps_world;
        lo[a] -= eps_world;
        put_row(base_ss + 6 * k + 2 * a + 0, hi);
        put_row(base_ss + 6 * k + 2 * a + 1, lo);
      }
    }
    for (int k = 0; k < n_p; ++k) {
      put_row(base_pm + k, space[k].pos);
      for (int a = 0; a < 3; ++a) {
        Vec3 hi = space[k].pos, lo = space[k].pos;
        hi[a] += eps_world;
        lo[a] -= eps_world;
        put_row(base_ps + 6 * k + 2 * a + 0, hi);
        put_row(base_ps + 6 * k + 2 * a + 1, lo);
      }
    }

    // Pass 1: forward only, retaining scalar outputs.
    const int K = model_.heads.class_count;
    std::vector<double> s_all(rows, 0.0), clog_all(rows, 0.0);
    Eigen::MatrixXd logits(n_s, K);
    {
      MatS X;
      for (int r0 = 0; r0 < rows; r0 += kChunk) {
        const int n = std::min(kChunk, rows - r0);
        build_field_inputs(grid, model_.heads.posenc, MatS(P.middleRows(r0, n)),
                           X);
        const MatS y = model_.heads.geo.forward(X);
        for (int i = 0; i < n; ++i) {
          s_all[r0 + i] = double(y(i, 0));
          clog_all[r0 + i] = double(y(i, 1));
        }
        if (r0 < n_s) {
          const int ns_chunk = std::min(n_s - r0, n);
          const MatS ys = model_.heads.sem.forward(MatS(X.topRows(ns_chunk)));
          for (int i = 0; i < ns_chunk; ++i)
            for (int c = 0; c < K; ++c) logits(r0 + i, c) = double(ys(i, c));
        }
      }
    }

    // Losses and upstream gradients (per-term means; weights folded into the
    // upstreams, reported terms stay unweighted).
    const LossWeights& w = setup_.weights;
    std::vector<double> up_s(rows, 0.0), up_c(rows, 0.0);
    Eigen::MatrixXd up_logits =
        Eigen::MatrixXd::Zero(std::max(n_s, 1), std::max(K, 1));
    std::vector<Vec3> n_pred(n_s);
    const int n_eik = n_s + n_p;

    for (int k = 0; k < n_s; ++k) {
      const double ds = s_all[k] - surf[k].offset;
      report.sdf += ds * ds / std::max(n_s, 1);
      up_s[k] += 2.0 * ds / std::max(n_s, 1);

      Vec3 g;
      for (int a = 0; a < 3; ++a)
        g[a] = (s_all[base_ss + 6 * k + 2 * a] -
                s_all[base_ss + 6 * k + 2 * a + 1]) /
               (2.0 * eps_world);
      n_pred[k] = g;

      const Vec3 dn = g - surf[k].normal;
      report.norm += dn.squaredNorm() / std::max(n_s, 1);
      const double rho = std::sqrt(g.squaredNorm() + 1e-12);
      const double eik_res = rho - 1.0;
      report.eik += eik_res * eik_res / std::max(n_eik, 1);
      for (int a = 0; a < 3; ++a) {
        const double up =
            w.norm * 2.0 * dn[a] / std::max(n_s, 1) +
            w.eik * 2.0 * eik_res / rho * g[a] / std::max(n_eik, 1);
        const double d = up / (2.0 * eps_world);
        up_s[base_ss + 6 * k + 2 * a + 0] += d;
        up_s[base_ss + 6 * k + 2 * a + 1] -= d;
      }

      const double z = clog_all[k];
      report.conf += (z > 0 ? std::log1p(std::exp(-z))
                            : -z + std::log1p(std::exp(z))) /
                     std::max(n_s, 1);
      up_c[k] += w.conf * (sigmoid(z) - 1.0) / std::max(n_s, 1);

      const double mx = logits.row(k).maxCoeff();
      double zsum = 0.0;
      for (int c = 0; c < K; ++c) zsum += std::exp(logits(k, c) - mx);
      report.sem +=
          (std::log(zsum) - (logits(k, surf[k].label) - mx)) / std::max(n_s, 1);
      for (int c = 0; c < K; ++c) {
        const double p = std::exp(logits(k, c) - mx) / zsum;
        up_logits(k, c) = w.sem *
                          (p - (c == surf[k].label ? 1.0 : 0.0)) /
                          std::max(n_s, 1);
      }
    }

    for (int k = 0; k < n_p; ++k) {
      Vec3 g;
      for (int a = 0; a < 3; ++a)
        g[a] = (s_all[base_ps + 6 * k + 2 * a] -
                s_all[base_ps + 6 * k + 2 * a + 1]) /
               (2.0 * eps_world);
      const double rho = std::sqrt(g.squaredNorm() + 1e-12);
      const double eik_res = rho - 1.0;
      report.eik += eik_res * eik_res / std::max(n_eik, 1);
      for (int a = 0; a < 3; ++a) {
        const double d = w.eik * 2.0 * eik_res / rho * g[a] /
                         std::max(n_eik, 1) / (2.0 * eps_world);
        up_s[base_ps + 6 * k + 2 * a + 0] += d;
        up_s[base_ps + 6 * k + 2 * a + 1] -= d;
      }
      const double z = clog_all[base_pm + k];
      report.conf += (z > 0 ? z + std::log1p(std::exp(-z))
                            : std::log1p(std::exp(z))) /
                     std::max(n_p, 1);
      up_c[base_pm + k] += w.conf * sigmoid(z) / std::max(n_p, 1);
    }

    // Odometry over pairs with at least one member in this tile.
    std::set<int> members(assignment.submap_ids.begin(),
                          assignment.submap_ids.end());
    std::vector<OdomConstraint> pairs;
    for (const auto& c : model_.odom)
      if (members.count(c.a) || members.count(c.b)) pairs.push_back(c);
    report.n_pairs = int(pairs.size());

    std::vector<Vec6> pose_grad;
    if (want_grads) pose_grad.assign(model_.poses.size(), Vec6::Zero());
    std::vector<Vec6> odom_grad;
    if (want_grads) odom_grad.assign(model_.poses.size(), Vec6::Zero());
    report.odom = loss_odom(pairs, model_.poses, w.w_odom,
                            want_grads ? &odom_grad : nullptr);
    if (want_grads)
      for (size_t i = 0; i < pose_grad.size(); ++i)
        pose_grad[i] += w.odom * odom_grad[i];

    report.total = report.weighted_total(w);
    if (!std::isfinite(report.total)) {
      std::ostringstream msg;
      msg << "non-finite loss at iteration " << it << " (tile " << tile
          << "): sdf=" << report.sdf << " norm=" << report.norm
          << " sem=" << report.sem << " eik=" << report.eik
          << " conf=" << report.conf << " odom=" << report.odom;
      throw std::runtime_error(msg.str());
    }
    if (!want_grads) return report;

    // Pass 2: chunked recompute with full reverse accumulation.
    std::fill(geo_grad_.begin(), geo_grad_.end(), Scalar(0));
    std::fill(sem_grad_.begin(), sem_grad_.end(), Scalar(0));
    std::vector<Scalar>& gg = grid_grads_[tile];
    gg.resize(grid.params.size(), Scalar(0));
    touched_.clear();

    std::vector<double> dpos(size_t(rows) * 3, 0.0);
    const int F = grid.feature_dim;
    const int gd = grid.out_dim();
    const int ed = model_.heads.posenc.dim();
    const int hits_per_row = 8 * grid.level_count();
    {
      MatS X, dX, dX_sem;
      typename Mlp<Scalar>::Cache cache, cache_sem;
      std::vector<CornerHit<Scalar>> hits;
      std::vector<Scalar> dfeat;
      std::vector<Scalar> up_enc(ed);
      MatS up_geo, up_sem;
      for (int r0 = 0; r0 < rows; r0 += kChunk) {
        const int n = std::min(kChunk, rows - r0);
        build_field_inputs(grid, model_.heads.posenc, MatS(P.middleRows(r0, n)),
                           X, &hits, &dfeat);
        model_.heads.geo.forward(X, &cache);
        up_geo.resize(n, 2);
        for (int i = 0; i < n; ++i) {
          up_geo(i, 0) = Scalar(up_s[r0 + i]);
          up_geo(i, 1) = Scalar(up_c[r0 + i]);
        }
        model_.heads.geo.backward(cache, up_geo, geo_grad_.data(), &dX);

        if (r0 < n_s) {
          const int ns_chunk = std::min(n_s - r0, n);
          model_.heads.sem.forward(MatS(X.topRows(ns_chunk)), &cache_sem);
          up_sem.resize(ns_chunk, K);
          for (int i = 0; i < ns_chunk; ++i)
            for (int c = 0; c < K; ++c)
              up_sem(i, c) = Scalar(up_logits(r0 + i, c));
          model_.heads.sem.backward(cache_sem, up_sem, sem_grad_.data(),
                                    &dX_sem);
          dX.topRows(ns_chunk) += dX_sem;
        }

        for (int i = 0; i < n; ++i) {
          const int row = r0 + i;
          const CornerHit<Scalar>* h = hits.data() + size_t(i) * hits_per_row;
          for (int j = 0; j < hits_per_row; ++j) {
            if (h[j].slot < 0) continue;
            const int level = j / 8;
            Scalar* dst = gg.data() + h[j].slot * F;
            const Scalar wgt = h[j].weight;
            for (int f = 0; f < F; ++f)
              dst[f] += wgt * dX(i, level * F + f);
            touched_.push_back(h[j].slot);
          }
          Scalar dp[3] = {Scalar(0), Scalar(0), Scalar(0)};
          const Scalar* df = dfeat.data() + size_t(i) * gd * 3;
          for (int f = 0; f < gd; ++f) {
            const Scalar u = dX(i, f);
            dp[0] += u * df[f * 3 + 0];
            dp[1] += u * df[f * 3 + 1];
            dp[2] += u * df[f * 3 + 2];
          }
          const Scalar p_row[3] = {P(row, 0), P(row, 1), P(row, 2)};
          for (int e = 0; e < ed; ++e) up_enc[e] = dX(i, gd + e);
          pos_enc_backward(model_.heads.posenc, p_row, up_enc.data(), dp);
          for (int a = 0; a < 3; ++a) {
            if (clamp_mask[row] & (1u << a)) continue;
            dpos[size_t(row) * 3 + a] = double(dp[a]) * inv_span;
          }
        }
      }
    }

    // Chain position gradients into pose coordinates. All seven geometry
    // evaluations of a sample share its point Jacobian (the stencil offsets
    // are constant world-frame vectors).
    for (int k = 0; k < n_s; ++k) {
      Vec3 v = Vec3::Zero();
      auto add_row = [&](int row) {
        v += Vec3(dpos[size_t(row) * 3], dpos[size_t(row) * 3 + 1],
                  dpos[size_t(row) * 3 + 2]);
      };
      add_row(k);
      for (int j = 0; j < 6; ++j) add_row(base_ss + 6 * k + j);
      pose_grad[surf[k].submap] += surf[k].pos_jac.transpose() * v;

      const Vec3 dl_dn =
          w.norm * (-2.0) * (n_pred[k] - surf[k].normal) / std::max(n_s, 1);
      pose_grad[surf[k].submap].tail<3>() +=
          surf[k].normal_jac.transpose() * dl_dn;
    }
    for (int k = 0; k < n_p; ++k) {
      Vec3 v = Vec3::Zero();
      auto add_row = [&](int row) {
        v += Vec3(dpos[size_t(row) * 3], dpos[size_t(row) * 3 + 1],
                  dpos[size_t(row) * 3 + 2]);
      };
      add_row(base_pm + k);
      for (int j = 0; j < 6; ++j) add_row(base_ps + 6 * k + j);
      pose_grad[space[k].submap] += space[k].pos_jac.transpose() * v;
    }

    std::sort(touched_.begin(), touched_.end());
    touched_.erase(std::unique(touched_.begin(), touched_.end()),
                   touched_.end());

    if (snap) {
      snap->geo.assign(geo_grad_.begin(), geo_grad_.end());
      snap->sem.assign(sem_grad_.begin(), sem_grad_.end());
      snap->grid.assign(model_.grids.size(), {});
      for (size_t t = 0; t < model_.grids.size(); ++t) {
        auto& buf = grid_grads_[t];
        buf.resize(model_.grids[t].params.size(), Scalar(0));
        snap->grid[t].assign(buf.begin(), buf.end());
      }
      snap->pose = pose_grad;
    }

    if (apply) {
      const double lr_mult = std::pow(10.0, -0.001 * double(it) / n_tiles);
      if (!setup_.freeze_field) {
        AdamWConfig cfg_a{setup_.lr_field, setup_.wd_field};
        opt_geo_.update_dense(model_.heads.geo.params(), geo_grad_.data(),
                              cfg_a, lr_mult);
        opt_sem_.update_dense(model_.heads.sem.params(), sem_grad_.data(),
                              cfg_a, lr_mult);
        opt_grid_[tile].update_slots(grid.params.data(), gg.data(), touched_,
                                     cfg_a, lr_mult);
      }
      if (!setup_.freeze_poses) apply_pose_updates(pose_grad);
      ++tile_iters_[tile];
    }

    // Clear only the touched entries so the dense buffer stays zero.
    for (const int64_t slot : touched_)
      std::fill_n(gg.data() + slot * F, F, Scalar(0));

    return report;
  }

  void apply_pose_updates(const std::vector<Vec6>& pose_grad) {
    const size_t n = model_.poses.size();
    std::vector<double> rho(3 * n), phi(3 * n), g_rho(3 * n), g_phi(3 * n);
    for (size_t i = 0; i < n; ++i) {
      Vec6 g = pose_grad[i];
      if (setup_.gauge_fix && i == 0) g.setZero();
      for (int a = 0; a < 3; ++a) {
        rho[3 * i + a] = model_.poses[i].xi[a];
        phi[3 * i + a] = model_.poses[i].xi[3 + a];
        g_rho[3 * i + a] = g[a];
        g_phi[3 * i + a] = g[3 + a];
      }
    }
    clip_global_norm(g_rho.data(), g_rho.size(), setup_.pose_clip);
    clip_global_norm(g_phi.data(), g_phi.size(), setup_.pose_clip);
    AdamWConfig cfg_b{setup_.lr_translation, 0.0};
    AdamWConfig cfg_c{setup_.lr_rotation, 0.0};
    opt_rho_.update_dense(rho.data(), g_rho.data(), cfg_b);
    opt_phi_.update_dense(phi.data(), g_phi.data(), cfg_c);
    for (size_t i = 0; i < n; ++i) {
      if (setup_.gauge_fix && i == 0) continue;
      for (int a = 0; a < 3; ++a) {
        model_.poses[i].xi[a] = rho[3 * i + a];
        model_.poses[i].xi[3 + a] = phi[3 * i + a];
      }
    }
  }

  static double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

  static constexpr int kChunk = 4096;

  FusionModel<Scalar>& model_;
  const TrainSetup setup_;
  std::vector<int64_t> tile_iters_;
  std::vector<Scalar> geo_grad_, sem_grad_;
  std::vector<std::vector<Scalar>> grid_grads_;
  std::vector<int64_t> touched_;
  AdamW<Scalar> opt_geo_, opt_sem_;
  std::vector<AdamW<Scalar>> opt_grid_;
  AdamW<double> opt_rho_, opt_phi_;
};

}  // namespace mapfuse
