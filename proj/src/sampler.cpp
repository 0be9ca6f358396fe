#include "mapfuse/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mapfuse {

std::vector<int> proportional_allocation(const std::vector<double>& weights,
                                         int n) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<int> counts(weights.size(), 0);
  if (total <= 0.0 || n <= 0) return counts;

  int assigned = 0;
  std::vector<std::pair<double, size_t>> remainders;
  remainders.reserve(weights.size());
  for (size_t i = 0; i < weights.size(); ++i) {
    const double quota = n * weights[i] / total;
    counts[i] = int(std::floor(quota));
    assigned += counts[i];
    remainders.emplace_back(quota - counts[i], i);
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a,
                                                     const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (int k = 0; k < n - assigned; ++k)
    ++counts[remainders[size_t(k) % remainders.size()].second];
  return counts;
}

SampleBatch sample_batch(const TileAssignment& tile,
                         const std::vector<const Submap*>& submaps_by_id,
                         int n_surf, double sigma_s, Rng& rng) {
  std::vector<double> areas;
  areas.reserve(tile.submap_ids.size());
  for (int id : tile.submap_ids)
    areas.push_back(mesh_area(submaps_by_id[id]->mesh));

  SampleBatch batch;
  const std::vector<int> counts = proportional_allocation(areas, n_surf);
  if (std::accumulate(counts.begin(), counts.end(), 0) == 0) return batch;

  batch.surface.reserve(n_surf);
  batch.space.reserve(n_surf);
  for (size_t m = 0; m < tile.submap_ids.size(); ++m) {
    const int count = counts[m];
    if (count == 0) continue;
    const Submap& sm = *submaps_by_id[tile.submap_ids[m]];

    const auto samples = sample_surface(sm.mesh, size_t(count), rng);
    for (const auto& s : samples) {
      SurfaceTarget t;
      t.base = s.point;
      t.normal = s.normal;
      t.label = s.label;
      t.submap = sm.id;
      batch.surface.push_back(t);
    }
    const size_t first = batch.surface.size() - samples.size();
    for (size_t i = 0; i < samples.size(); ++i)
      batch.surface[first + i].offset = sigma_s * rng.normal();

    for (int i = 0; i < count; ++i) {
      SpaceTarget t;
      t.point = rng.uniform_in(sm.aabb_local);
      t.submap = sm.id;
      batch.space.push_back(t);
    }
  }
  return batch;
}

PosedBatch pose_batch(const SampleBatch& batch,
                      const std::vector<PoseParam>& poses_by_id) {
  struct Cached {
    RigidTransform T;  // exp(xi)
    Mat6 jl;
    Mat3 jl_rot;
    bool ready = false;
  };
  std::vector<Cached> cache(poses_by_id.size());
  auto posed = [&](int id) -> const Cached& {
    if (id < 0 || size_t(id) >= poses_by_id.size())
      throw std::out_of_range("sample references unknown submap " +
                              std::to_string(id));
    Cached& c = cache[id];
    if (!c.ready) {
      const Vec6& xi = poses_by_id[id].xi;
      c.T = se3_exp(xi);
      c.jl = se3_left_jacobian(xi);
      c.jl_rot = so3_left_jacobian(se3_phi(xi));
      c.ready = true;
    }
    return c;
  };

  PosedBatch out;
  out.surface.reserve(batch.surface.size());
  out.space.reserve(batch.space.size());

  for (const auto& t : batch.surface) {
    const Cached& c = posed(t.submap);
    const RigidTransform& anchor = poses_by_id[t.submap].anchor;
    const Vec3 q = anchor.apply(t.base);
    const Vec3 m = anchor.R * t.normal;
    const Vec3 tq = c.T.apply(q);
    const Vec3 n_world = c.T.R * m;

    PosedSurface p;
    p.normal = n_world;
    p.pos = tq + t.offset * n_world;
    p.normal_jac = -skew(n_world) * c.jl_rot;
    Mat36 j;
    j.leftCols<3>() = Mat3::Identity();
    j.rightCols<3>() = -skew(tq);
    p.pos_jac = j * c.jl;
    p.pos_jac.rightCols<3>() += t.offset * p.normal_jac;
    p.label = t.label;
    p.offset = t.offset;
    p.submap = t.submap;
    out.surface.push_back(p);
  }

  for (const auto& t : batch.space) {
    const Cached& c = posed(t.submap);
    const RigidTransform& anchor = poses_by_id[t.submap].anchor;
    const Vec3 q = anchor.apply(t.point);

    PosedSpace p;
    p.pos = c.T.apply(q);
    Mat36 j;
    j.leftCols<3>() = Mat3::Identity();
    j.rightCols<3>() = -skew(p.pos);
    p.pos_jac = j * c.jl;
    p.submap = t.submap;
    out.space.push_back(p);
  }
  return out;
}

}  // namespace mapfuse
