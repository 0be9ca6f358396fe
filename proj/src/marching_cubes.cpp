#include "mapfuse/marching_cubes.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>

#include "mc_tables.hpp"

namespace mapfuse {
namespace {

// Cube corners in table order, relative to the cell's low lattice point.
constexpr int kCorner[8][3] = {
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
    {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1},
};

// Each cube edge keyed by its low corner and the axis it runs along; this is
// what lets adjacent cells weld the same crossing to one vertex.
constexpr int kEdgeBase[12] = {0, 1, 3, 0, 4, 5, 7, 4, 0, 1, 2, 3};
constexpr int kEdgeAxis[12] = {0, 1, 0, 1, 0, 1, 0, 1, 2, 2, 2, 2};

}  // namespace

TriangleMesh marching_cubes(const LatticeGrid& grid) {
  if (grid.values.size() != static_cast<size_t>(grid.nx) * grid.ny * grid.nz)
    throw std::invalid_argument("marching_cubes: value count does not match lattice dims");

  TriangleMesh mesh;
  if (grid.nx < 2 || grid.ny < 2 || grid.nz < 2) return mesh;

  std::unordered_map<uint64_t, int> edge_vertex;
  // Vertex on the lattice edge starting at point (i,j,k) and running along
  // `axis`; created on first use, shared afterwards.
  auto vertex_on_edge = [&](int i, int j, int k, int axis) {
    const uint64_t key =
        (((static_cast<uint64_t>(k) * grid.ny + j) * grid.nx + i) << 2) | axis;
    auto it = edge_vertex.find(key);
    if (it != edge_vertex.end()) return it->second;
    const int ni = i + (axis == 0), nj = j + (axis == 1), nk = k + (axis == 2);
    const double v0 = grid.at(i, j, k);
    const double v1 = grid.at(ni, nj, nk);
    const double denom = v0 - v1;
    double t = std::abs(denom) < 1e-30 ? 0.5 : v0 / denom;
    t = std::min(1.0, std::max(0.0, t));
    Vec3 p = grid.point(i, j, k);
    p[axis] += t * grid.voxel;
    const int idx = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(p);
    edge_vertex.emplace(key, idx);
    return idx;
  };

  for (int k = 0; k + 1 < grid.nz; ++k)
    for (int j = 0; j + 1 < grid.ny; ++j)
      for (int i = 0; i + 1 < grid.nx; ++i) {
        int cube = 0;
        for (int c = 0; c < 8; ++c)
          if (grid.at(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2]) > 0.0f)
            cube |= 1 << c;
        if (mc::kEdgeTable[cube] == 0) continue;

        int ev[12];
        for (int e = 0; e < 12; ++e) {
          if (!(mc::kEdgeTable[cube] & (1 << e))) continue;
          const int* b = kCorner[kEdgeBase[e]];
          ev[e] = vertex_on_edge(i + b[0], j + b[1], k + b[2], kEdgeAxis[e]);
        }
        const int8_t* tri = mc::kTriTable[cube];
        for (int n = 0; tri[n] != -1; n += 3) {
          const int a = ev[tri[n]], b = ev[tri[n + 1]], c = ev[tri[n + 2]];
          if (a == b || b == c || a == c) continue;  // crossing collapsed by clamping
          mesh.faces.push_back({a, b, c});
        }
      }
  mesh.face_labels.assign(mesh.faces.size(), 0);
  return mesh;
}

}  // namespace mapfuse
