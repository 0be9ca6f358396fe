#pragma once

#include <cstdint>
#include <vector>

#include "mapfuse/se3.hpp"
#include "mapfuse/session.hpp"
#include "mapfuse/tiling.hpp"

namespace mapfuse {

/// Surface supervision sample in its submap's local frame: an on-mesh base
/// point, unit normal, normal-offset SDF target, and class label.
struct SurfaceTarget {
  Vec3 base;
  Vec3 normal;
  double offset = 0.0;  // ~ N(0, sigma_s)
  uint8_t label = 0;
  int submap = -1;  // global id
};

struct SpaceTarget {
  Vec3 point;  // uniform in the submap's local AABB
  int submap = -1;
};

struct SampleBatch {
  std::vector<SurfaceTarget> surface;
  std::vector<SpaceTarget> space;  // same count as surface
};

/// Splits n across weights proportionally (largest remainder, ties to the
/// lower index). Sum of the result is exactly n.
std::vector<int> proportional_allocation(const std::vector<double>& weights,
                                         int n);

/// Draws a per-iteration batch for one tile: surface points allocated across
/// member submaps proportional to mesh area, offsets ~ N(0, sigma_s), and an
/// equal number of free-space points uniform in each member's local AABB.
/// Empty (zero-area) tiles yield an empty batch.
SampleBatch sample_batch(const TileAssignment& tile,
                         const std::vector<const Submap*>& submaps_by_id,
                         int n_surf, double sigma_s, Rng& rng);

/// Pose parametrization used by the optimizer: P = exp(xi) * anchor, with
/// the anchor frozen at its initialization (GPS or --init-poses).
struct PoseParam {
  Vec6 xi = Vec6::Zero();
  RigidTransform anchor;

  RigidTransform pose() const { return se3_exp(xi).compose(anchor); }
};

struct PosedSurface {
  Vec3 pos;             // T(xi) q + offset * n_world
  Vec3 normal;          // n_world = R(xi) * (R_anchor n_local)
  Mat36 pos_jac;        // d pos / d xi
  Mat3 normal_jac;      // d normal / d phi
  uint8_t label = 0;
  double offset = 0.0;
  int submap = -1;
};

struct PosedSpace {
  Vec3 pos;
  Mat36 pos_jac;
  int submap = -1;
};

struct PosedBatch {
  std::vector<PosedSurface> surface;
  std::vector<PosedSpace> space;
};

/// Applies current poses to a batch and differentiates each world point (and
/// rotated normal) with respect to its submap's xi.
PosedBatch pose_batch(const SampleBatch& batch,
                      const std::vector<PoseParam>& poses_by_id);

}  // namespace mapfuse
