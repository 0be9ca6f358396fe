#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mapfuse/rng.hpp"
#include "mapfuse/types.hpp"

namespace mapfuse {

struct HashGridConfig {
  int levels = 16;
  int feature_dim = 2;
  int base_resolution = 16;    // cells per tile side, coarsest level
  int max_resolution = 2048;   // finest level
  int codebook_bits = 16;
};

struct OctreeConfig {
  int feature_levels = 4;
  double leaf_voxel_m = 0.5;  // finest-level voxel edge, meters
  int feature_dim = 4;
};

enum class GridVariant { kHash, kOctree };

/// Corner key for sparse tables; coordinates must be < 2^21.
inline uint64_t pack_corner(int x, int y, int z) {
  return uint64_t(uint32_t(x)) | (uint64_t(uint32_t(y)) << 21) |
         (uint64_t(uint32_t(z)) << 42);
}

/// One (table slot, trilinear weight) contribution of an interpolation.
/// slot == -1 marks a missing octree corner or an inactive level.
template <class Scalar>
struct CornerHit {
  int64_t slot = -1;  // global slot id across levels
  Scalar weight = 0;
};

/// Sparse multi-resolution feature storage for one tile, in the tile's unit
/// cube. Interpolated features concatenate over levels; levels at or above
/// active_levels are masked to exactly zero.
template <class Scalar>
struct FeatureGrid {
  struct Level {
    double scale = 1.0;      // cells per unit-cube side
    int max_cell = 0;        // cells are clamped to [0, max_cell]
    int dense_corners = 0;   // >0: injective dense indexing, corners per axis
    uint32_t hash_mask = 0;  // spatial-hash levels
    int64_t slot_offset = 0;
    int64_t slot_count = 0;
    std::unordered_map<uint64_t, int32_t> slot_map;  // octree corner -> slot
    std::vector<uint64_t> corner_keys;  // octree, slot order
    int64_t voxel_count = 0;            // octree allocation bookkeeping
  };

  GridVariant variant = GridVariant::kHash;
  int feature_dim = 2;
  int active_levels = 0;
  std::vector<Level> levels;
  std::vector<Scalar> params;  // [slot][feature_dim], levels concatenated

  int level_count() const { return int(levels.size()); }
  int out_dim() const { return level_count() * feature_dim; }
  int64_t slot_total() const {
    return levels.empty() ? 0
                          : levels.back().slot_offset + levels.back().slot_count;
  }

  /// Slot of a corner at integer coordinates, -1 when absent (octree).
  int64_t corner_slot(int level, int x, int y, int z) const {
    const Level& lv = levels[level];
    if (variant == GridVariant::kOctree) {
      const auto it = lv.slot_map.find(pack_corner(x, y, z));
      return it == lv.slot_map.end() ? -1 : lv.slot_offset + it->second;
    }
    if (lv.dense_corners > 0) {
      const int64_t c = lv.dense_corners;
      return lv.slot_offset + (int64_t(z) * c + y) * c + x;
    }
    const uint32_t h = uint32_t(x) ^ (uint32_t(y) * 2654435761u) ^
                       (uint32_t(z) * 805459861u);
    return lv.slot_offset + (h & lv.hash_mask);
  }

  /// Finest active resolution (cells per unit side); 1 when nothing active.
  double finest_active_scale() const {
    double s = 1.0;
    for (int l = 0; l < std::min(active_levels, level_count()); ++l)
      s = std::max(s, levels[l].scale);
    return s;
  }
};

/// Progressive level-of-detail: start with the coarser half, add one level
/// every `iters_per_level` per-tile iterations.
inline int lod_start(int levels) { return (levels + 1) / 2; }
inline int lod_schedule(int levels, int64_t tile_iteration,
                        int iters_per_level) {
  if (iters_per_level <= 0) return levels;
  const int64_t n = lod_start(levels) + tile_iteration / iters_per_level;
  return int(std::min<int64_t>(levels, n));
}

inline void init_grid_params(std::vector<float>& params, size_t n, Rng& rng) {
  params.resize(n);
  for (auto& p : params) p = float(rng.uniform(-1e-4, 1e-4));
}
inline void init_grid_params(std::vector<double>& params, size_t n, Rng& rng) {
  params.resize(n);
  for (auto& p : params) p = rng.uniform(-1e-4, 1e-4);
}

/// Multi-level hash grid; level resolutions follow the geometric sequence
/// r_l = floor(base * (max/base)^(l/(L-1))). Levels whose dense corner count
/// fits the codebook use the injective dense index instead of the hash.
template <class Scalar>
FeatureGrid<Scalar> make_hash_grid(const HashGridConfig& cfg, Rng& rng) {
  if (cfg.levels < 1 || cfg.feature_dim < 1 || cfg.base_resolution < 1 ||
      cfg.max_resolution < cfg.base_resolution || cfg.codebook_bits < 1 ||
      cfg.codebook_bits > 30)
    throw std::invalid_argument("bad hash-grid config");

  FeatureGrid<Scalar> g;
  g.variant = GridVariant::kHash;
  g.feature_dim = cfg.feature_dim;
  g.active_levels = cfg.levels;

  const int64_t codebook = int64_t(1) << cfg.codebook_bits;
  int64_t slot_offset = 0;
  for (int l = 0; l < cfg.levels; ++l) {
    const double expo =
        cfg.levels == 1 ? 0.0 : double(l) / double(cfg.levels - 1);
    const int r = int(std::floor(
        cfg.base_resolution *
        std::pow(double(cfg.max_resolution) / cfg.base_resolution, expo)));
    typename FeatureGrid<Scalar>::Level lv;
    lv.scale = r;
    lv.max_cell = r - 1;
    const int64_t corners = r + 1;
    if (corners * corners * corners <= codebook) {
      lv.dense_corners = int(corners);
      lv.slot_count = corners * corners * corners;
    } else {
      lv.hash_mask = uint32_t(codebook - 1);
      lv.slot_count = codebook;
    }
    lv.slot_offset = slot_offset;
    slot_offset += lv.slot_count;
    g.levels.push_back(std::move(lv));
  }
  init_grid_params(g.params, size_t(slot_offset) * cfg.feature_dim, rng);
  return g;
}

/// Corner-feature octree. Voxels are allocated at every level around the
/// ingested surface points (unit-cube coordinates), dilated by one voxel;
/// corners shared between voxels are stored once, in insertion order.
template <class Scalar>
FeatureGrid<Scalar> make_octree_grid(const OctreeConfig& cfg,
                                     double world_span,
                                     const std::vector<Vec3>& unit_points,
                                     Rng& rng) {
  if (cfg.feature_levels < 1 || cfg.feature_dim < 1 ||
      cfg.leaf_voxel_m <= 0.0 || world_span <= 0.0)
    throw std::invalid_argument("bad octree config");

  FeatureGrid<Scalar> g;
  g.variant = GridVariant::kOctree;
  g.feature_dim = cfg.feature_dim;
  g.active_levels = cfg.feature_levels;

  for (int l = 0; l < cfg.feature_levels; ++l) {
    const double voxel_m =
        cfg.leaf_voxel_m * std::pow(2.0, cfg.feature_levels - 1 - l);
    typename FeatureGrid<Scalar>::Level lv;
    lv.scale = world_span / voxel_m;
    lv.max_cell = std::max(0, int(std::ceil(lv.scale)) - 1);
    g.levels.push_back(std::move(lv));
  }

  int64_t slot_offset = 0;
  for (int l = 0; l < cfg.feature_levels; ++l) {
    auto& lv = g.levels[l];
    std::unordered_set<uint64_t> voxels;
    auto add_voxel = [&](int cx, int cy, int cz) {
      if (cx < 0 || cy < 0 || cz < 0 || cx > lv.max_cell ||
          cy > lv.max_cell || cz > lv.max_cell)
        return;
      if (!voxels.insert(pack_corner(cx, cy, cz)).second) return;
      ++lv.voxel_count;
      for (int k = 0; k < 8; ++k) {
        const uint64_t key =
            pack_corner(cx + (k & 1), cy + ((k >> 1) & 1), cz + (k >> 2));
        const auto [it, inserted] =
            lv.slot_map.try_emplace(key, int32_t(lv.corner_keys.size()));
        if (inserted) lv.corner_keys.push_back(key);
      }
    };
    for (const Vec3& p : unit_points) {
      int cell[3];
      for (int a = 0; a < 3; ++a)
        cell[a] = std::clamp(int(std::floor(p[a] * lv.scale)), 0, lv.max_cell);
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx)
            add_voxel(cell[0] + dx, cell[1] + dy, cell[2] + dz);
    }
    lv.slot_offset = slot_offset;
    lv.slot_count = int64_t(lv.corner_keys.size());
    slot_offset += lv.slot_count;
  }
  init_grid_params(g.params, size_t(slot_offset) * cfg.feature_dim, rng);
  return g;
}

/// Trilinear interpolation at p_unit (clamped to [0,1]^3) with optional
/// position Jacobian and corner contribution list.
///   feat: out_dim values (inactive levels exactly zero)
///   jac:  out_dim x 3 row-major, d feat / d p_unit (nullable)
///   hits: 8 * level_count entries (nullable)
template <class Scalar>
void grid_interpolate(const FeatureGrid<Scalar>& g, const Scalar* p_unit,
                      Scalar* feat, Scalar* jac = nullptr,
                      CornerHit<Scalar>* hits = nullptr) {
  const int F = g.feature_dim;
  const int L = g.level_count();
  std::fill(feat, feat + size_t(L) * F, Scalar(0));
  if (jac) std::fill(jac, jac + size_t(L) * F * 3, Scalar(0));
  if (hits)
    std::fill(hits, hits + size_t(L) * 8, CornerHit<Scalar>{});

  Scalar p[3];
  for (int a = 0; a < 3; ++a)
    p[a] = std::clamp(p_unit[a], Scalar(0), Scalar(1));

  for (int l = 0; l < L; ++l) {
    if (l >= g.active_levels) continue;
    const auto& lv = g.levels[l];
    int cell[3];
    Scalar frac[3];
    for (int a = 0; a < 3; ++a) {
      const Scalar s = p[a] * Scalar(lv.scale);
      cell[a] = std::clamp(int(std::floor(double(s))), 0, lv.max_cell);
      frac[a] = s - Scalar(cell[a]);
    }
    const Scalar wx[2] = {Scalar(1) - frac[0], frac[0]};
    const Scalar wy[2] = {Scalar(1) - frac[1], frac[1]};
    const Scalar wz[2] = {Scalar(1) - frac[2], frac[2]};

    for (int k = 0; k < 8; ++k) {
      const int i = k & 1, j = (k >> 1) & 1, m = k >> 2;
      const int64_t slot =
          g.corner_slot(l, cell[0] + i, cell[1] + j, cell[2] + m);
      const Scalar w = wx[i] * wy[j] * wz[m];
      if (hits) hits[l * 8 + k] = CornerHit<Scalar>{slot, w};
      if (slot < 0) continue;
      const Scalar* entry = g.params.data() + slot * F;
      for (int f = 0; f < F; ++f) feat[l * F + f] += w * entry[f];
      if (jac) {
        const Scalar sc = Scalar(lv.scale);
        const Scalar dw[3] = {(i ? Scalar(1) : Scalar(-1)) * wy[j] * wz[m] * sc,
                              (j ? Scalar(1) : Scalar(-1)) * wx[i] * wz[m] * sc,
                              (m ? Scalar(1) : Scalar(-1)) * wx[i] * wy[j] * sc};
        for (int f = 0; f < F; ++f) {
          const Scalar v = entry[f];
          Scalar* row = jac + (size_t(l) * F + f) * 3;
          row[0] += dw[0] * v;
          row[1] += dw[1] * v;
          row[2] += dw[2] * v;
        }
      }
    }
  }
}

}  // namespace mapfuse
