#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "mapfuse/feature_grid.hpp"
#include "mapfuse/mlp.hpp"
#include "mapfuse/types.hpp"

namespace mapfuse {

template <class Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

struct PosEncConfig {
  int num_frequencies = 6;
  bool include_raw = true;
  int dim() const {
    return 3 * ((include_raw ? 1 : 0) + 2 * num_frequencies);
  }
};

/// enc(p) = [p; sin(2^j pi p); cos(2^j pi p)], j = 0..F-1, componentwise
/// blocks of three.
template <class Scalar>
void pos_enc(const PosEncConfig& cfg, const Scalar* p, Scalar* out) {
  int o = 0;
  if (cfg.include_raw)
    for (int a = 0; a < 3; ++a) out[o++] = p[a];
  double freq = M_PI;
  for (int j = 0; j < cfg.num_frequencies; ++j, freq *= 2.0) {
    for (int a = 0; a < 3; ++a) out[o + a] = std::sin(Scalar(freq) * p[a]);
    for (int a = 0; a < 3; ++a) out[o + 3 + a] = std::cos(Scalar(freq) * p[a]);
    o += 6;
  }
}

/// dp += (d enc / d p)^T * upstream
template <class Scalar>
void pos_enc_backward(const PosEncConfig& cfg, const Scalar* p,
                      const Scalar* upstream, Scalar* dp) {
  int o = 0;
  if (cfg.include_raw)
    for (int a = 0; a < 3; ++a) dp[a] += upstream[o++];
  double freq = M_PI;
  for (int j = 0; j < cfg.num_frequencies; ++j, freq *= 2.0) {
    const Scalar f = Scalar(freq);
    for (int a = 0; a < 3; ++a) {
      dp[a] += upstream[o + a] * f * std::cos(f * p[a]);
      dp[a] -= upstream[o + 3 + a] * f * std::sin(f * p[a]);
    }
    o += 6;
  }
}

/// Maps world coordinates into a tile's unit cube. The span is the larger of
/// the tile side and the tile's z extent; z is centered so level resolutions
/// stay isotropic.
struct TileNorm {
  Vec3 origin = Vec3::Zero();
  double span = 1.0;

  Vec3 to_unit(const Vec3& w) const { return (w - origin) / span; }
  Vec3 to_world(const Vec3& u) const { return origin + span * u; }
};

inline TileNorm make_tile_norm(const Aabb& tile_box, double tile_side) {
  TileNorm n;
  const double z_extent = tile_box.max.z() - tile_box.min.z();
  n.span = std::max(tile_side, z_extent);
  const double z_mid = 0.5 * (tile_box.min.z() + tile_box.max.z());
  n.origin = Vec3(tile_box.min.x(), tile_box.min.y(), z_mid - 0.5 * n.span);
  return n;
}

/// Shared decoder heads: geometry (outputs sdf + confidence logit) and
/// semantics (K class logits). One instance serves every tile.
template <class Scalar>
struct FieldHeads {
  Mlp<Scalar> geo;
  Mlp<Scalar> sem;
  PosEncConfig posenc;
  int grid_dim = 0;
  int class_count = 0;

  int in_dim() const { return grid_dim + posenc.dim(); }
};

template <class Scalar>
FieldHeads<Scalar> make_heads(int grid_dim, int class_count, int hidden,
                              const PosEncConfig& pe, Rng& rng) {
  FieldHeads<Scalar> h;
  h.posenc = pe;
  h.grid_dim = grid_dim;
  h.class_count = class_count;
  const int in = grid_dim + pe.dim();
  h.geo = Mlp<Scalar>(in, hidden, 2, Activation::kSoftplus100);
  h.sem = Mlp<Scalar>(in, hidden, class_count, Activation::kRelu);
  h.geo.init_weights(rng);
  h.sem.init_weights(rng);
  h.geo.bias_out(0) = Scalar(0.5);  // empty space starts "outside"
  return h;
}

/// Fills X rows with [grid features | positional encoding] for unit-cube
/// points P (n x 3). Optional per-row corner hits (8 * levels each) and
/// feature Jacobians d feat / d p_unit (out_dim * 3 each, row-major).
template <class Scalar>
void build_field_inputs(const FeatureGrid<Scalar>& grid,
                        const PosEncConfig& pe, const MatX<Scalar>& P,
                        MatX<Scalar>& X,
                        std::vector<CornerHit<Scalar>>* hits = nullptr,
                        std::vector<Scalar>* dfeat = nullptr) {
  const int n = int(P.rows());
  const int gd = grid.out_dim();
  const int ed = pe.dim();
  const int hits_per_row = 8 * grid.level_count();
  X.resize(n, gd + ed);
  if (hits) hits->resize(size_t(n) * hits_per_row);
  if (dfeat) dfeat->resize(size_t(n) * gd * 3);

  std::vector<Scalar> feat(gd), enc(ed);
  for (int i = 0; i < n; ++i) {
    const Scalar p[3] = {P(i, 0), P(i, 1), P(i, 2)};
    grid_interpolate(grid, p, feat.data(),
                     dfeat ? dfeat->data() + size_t(i) * gd * 3 : nullptr,
                     hits ? hits->data() + size_t(i) * hits_per_row : nullptr);
    pos_enc(pe, p, enc.data());
    for (int f = 0; f < gd; ++f) X(i, f) = feat[f];
    for (int e = 0; e < ed; ++e) X(i, gd + e) = enc[e];
  }
}

struct FieldOutput {
  double sdf = 0.0;
  double confidence = 0.0;           // sigmoid of the logit
  std::vector<double> logits;
  std::vector<double> class_scores;  // softmax
};

template <class Scalar>
FieldOutput field_forward(const FeatureGrid<Scalar>& grid,
                          const FieldHeads<Scalar>& heads,
                          const TileNorm& norm, const Vec3& p_world) {
  const Vec3 u = norm.to_unit(p_world);
  MatX<Scalar> P(1, 3);
  for (int a = 0; a < 3; ++a)
    P(0, a) = Scalar(std::clamp(u[a], 0.0, 1.0));
  MatX<Scalar> X;
  build_field_inputs(grid, heads.posenc, P, X);
  const MatX<Scalar> g = heads.geo.forward(X);
  const MatX<Scalar> s = heads.sem.forward(X);

  FieldOutput out;
  out.sdf = double(g(0, 0));
  out.confidence = 1.0 / (1.0 + std::exp(-double(g(0, 1))));
  out.logits.resize(heads.class_count);
  double mx = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < heads.class_count; ++k) {
    out.logits[k] = double(s(0, k));
    mx = std::max(mx, out.logits[k]);
  }
  out.class_scores.resize(heads.class_count);
  double z = 0.0;
  for (int k = 0; k < heads.class_count; ++k)
    z += (out.class_scores[k] = std::exp(out.logits[k] - mx));
  for (auto& c : out.class_scores) c /= z;
  return out;
}

/// Central-difference SDF gradient with the stencil step in meters.
template <class Scalar>
Vec3 field_numerical_gradient(const FeatureGrid<Scalar>& grid,
                              const FieldHeads<Scalar>& heads,
                              const TileNorm& norm, const Vec3& p_world,
                              double eps_world) {
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    Vec3 hi = p_world, lo = p_world;
    hi[a] += eps_world;
    lo[a] -= eps_world;
    const double s_hi = field_forward(grid, heads, norm, hi).sdf;
    const double s_lo = field_forward(grid, heads, norm, lo).sdf;
    g[a] = (s_hi - s_lo) / (2.0 * eps_world);
  }
  return g;
}

/// Stencil step: half the finest active level's cell size, in meters.
template <class Scalar>
double default_fd_eps(const FeatureGrid<Scalar>& grid, const TileNorm& norm) {
  return norm.span / (2.0 * grid.finest_active_scale());
}

}  // namespace mapfuse
