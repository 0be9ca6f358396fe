#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mapfuse/marching_cubes.hpp"
#include "mapfuse/trainer.hpp"

namespace mapfuse {

struct ExtractConfig {
  double voxel_m = 0.1;
  double conf_threshold = 0.7;
  double pad_m = 0.3;  // margin around the observed bounds
};

/// Lattice samples of one tile's field. Sampling dominates extraction cost,
/// so confidence-threshold sweeps reuse this cache and redo only the masking
/// and the surface walk.
struct TileFieldSamples {
  LatticeGrid lattice;      // values = sdf
  std::vector<float> conf;  // same layout
  bool empty() const { return lattice.values.empty(); }
};

struct ExtractedMesh {
  TriangleMesh mesh;
  std::vector<float> vertex_confidence;
};

namespace detail {

/// Chunked field evaluation at world points; any output may be null.
/// Semantic labels take the argmax logit, ties to the smaller class id.
template <class Scalar>
void eval_field_points(const FeatureGrid<Scalar>& grid,
                       const FieldHeads<Scalar>& heads, const TileNorm& norm,
                       const std::vector<Vec3>& pts, std::vector<float>* sdf,
                       std::vector<float>* conf, std::vector<uint8_t>* label) {
  const size_t n = pts.size();
  if (sdf) sdf->resize(n);
  if (conf) conf->resize(n);
  if (label) label->resize(n);
  constexpr size_t kChunk = 8192;
  MatX<Scalar> P, X;
  for (size_t c0 = 0; c0 < n; c0 += kChunk) {
    const int m = int(std::min(n, c0 + kChunk) - c0);
    P.resize(m, 3);
    for (int i = 0; i < m; ++i) {
      const Vec3 u = norm.to_unit(pts[c0 + i]);
      for (int a = 0; a < 3; ++a) P(i, a) = Scalar(std::clamp(u[a], 0.0, 1.0));
    }
    build_field_inputs(grid, heads.posenc, P, X);
    if (sdf || conf) {
      const MatX<Scalar> g = heads.geo.forward(X);
      for (int i = 0; i < m; ++i) {
        if (sdf) (*sdf)[c0 + i] = float(g(i, 0));
        if (conf)
          (*conf)[c0 + i] = float(1.0 / (1.0 + std::exp(-double(g(i, 1)))));
      }
    }
    if (label) {
      const MatX<Scalar> s = heads.sem.forward(X);
      for (int i = 0; i < m; ++i) {
        int best = 0;
        for (int k = 1; k < heads.class_count; ++k)
          if (s(i, k) > s(i, best)) best = k;
        (*label)[c0 + i] = uint8_t(best);
      }
    }
  }
}

/// First lattice cell owned by tile column n (cells live on one global
/// lattice, so neighboring tiles partition them exactly).
inline int tile_cell_begin(int n, double side, double voxel) {
  return int(std::ceil(n * side / voxel - 1e-9));
}

}  // namespace detail

/// Samples sdf + confidence on the tile's share of the global extraction
/// lattice: cells whose low corner falls in the tile's half-open footprint,
/// clipped to the observed bounds (union of member AABBs under the current
/// poses), padded by cfg.pad_m.
template <class Scalar>
TileFieldSamples sample_tile_field(const FusionModel<Scalar>& model, int tile,
                                   const ExtractConfig& cfg) {
  const TileAssignment& asg = model.tiling.tiles[tile];
  Aabb obs;
  for (int id : asg.submap_ids)
    obs.expand(posed_aabb(model.submaps[id]->aabb_local, model.poses[id].pose()));
  obs = obs.padded(cfg.pad_m);

  TileFieldSamples out;
  if (obs.empty()) return out;
  const double v = cfg.voxel_m;
  const double side = model.tiling.tile_side;
  int lo[3], hi[3];  // owned cell range per axis, half-open
  for (int a = 0; a < 3; ++a) {
    lo[a] = int(std::floor(obs.min[a] / v));
    hi[a] = int(std::ceil(obs.max[a] / v));
  }
  lo[0] = std::max(lo[0], detail::tile_cell_begin(asg.tile.ix, side, v));
  hi[0] = std::min(hi[0], detail::tile_cell_begin(asg.tile.ix + 1, side, v));
  lo[1] = std::max(lo[1], detail::tile_cell_begin(asg.tile.iy, side, v));
  hi[1] = std::min(hi[1], detail::tile_cell_begin(asg.tile.iy + 1, side, v));
  if (lo[0] >= hi[0] || lo[1] >= hi[1] || lo[2] >= hi[2]) return out;

  LatticeGrid& g = out.lattice;
  g.nx = hi[0] - lo[0] + 1;
  g.ny = hi[1] - lo[1] + 1;
  g.nz = hi[2] - lo[2] + 1;
  g.voxel = v;
  g.origin = v * Vec3(lo[0], lo[1], lo[2]);
  const size_t count = size_t(g.nx) * g.ny * g.nz;
  if (count > size_t(3) * 100'000'000)
    throw std::runtime_error(
        "extraction lattice too large; increase the voxel size");

  std::vector<Vec3> pts;
  pts.reserve(count);
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) pts.push_back(g.point(i, j, k));
  std::vector<float> sdf;
  detail::eval_field_points(model.grids[tile], model.heads, model.norms[tile],
                            pts, &sdf, &out.conf, nullptr);
  g.values = std::move(sdf);
  return out;
}

/// Masks low-confidence lattice points to +10 voxels (forced outside), walks
/// the zero level set, and annotates vertices with confidence and faces with
/// the majority vertex label (ties to the smaller id).
template <class Scalar>
ExtractedMesh extract_tile(const FusionModel<Scalar>& model, int tile,
                           const ExtractConfig& cfg,
                           const TileFieldSamples& samples) {
  ExtractedMesh out;
  if (samples.empty()) return out;
  LatticeGrid masked = samples.lattice;
  const float outside = float(10.0 * masked.voxel);
  const float th = float(cfg.conf_threshold);
  for (size_t i = 0; i < masked.values.size(); ++i)
    if (samples.conf[i] < th) masked.values[i] = outside;
  out.mesh = marching_cubes(masked);
  if (out.mesh.vertices.empty()) return out;

  std::vector<uint8_t> vlabel;
  detail::eval_field_points(model.grids[tile], model.heads, model.norms[tile],
                            out.mesh.vertices, nullptr,
                            &out.vertex_confidence, &vlabel);
  for (size_t f = 0; f < out.mesh.faces.size(); ++f) {
    const auto& fc = out.mesh.faces[f];
    const uint8_t a = vlabel[fc[0]], b = vlabel[fc[1]], c = vlabel[fc[2]];
    uint8_t m = (a == b || a == c) ? a : (b == c) ? b : std::min({a, b, c});
    out.mesh.face_labels[f] = m;
  }
  return out;
}

template <class Scalar>
ExtractedMesh extract_tile(const FusionModel<Scalar>& model, int tile,
                           const ExtractConfig& cfg) {
  return extract_tile(model, tile, cfg, sample_tile_field(model, tile, cfg));
}

/// Concatenation of all per-tile extractions (tiles partition the lattice
/// cells, so nothing is emitted twice).
template <class Scalar>
ExtractedMesh extract_fused(const FusionModel<Scalar>& model,
                            const ExtractConfig& cfg) {
  ExtractedMesh out;
  for (int t = 0; t < int(model.tiling.tiles.size()); ++t) {
    ExtractedMesh part = extract_tile(model, t, cfg);
    append_mesh(out.mesh, part.mesh);
    out.vertex_confidence.insert(out.vertex_confidence.end(),
                                 part.vertex_confidence.begin(),
                                 part.vertex_confidence.end());
  }
  return out;
}

}  // namespace mapfuse
