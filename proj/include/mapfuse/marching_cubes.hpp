#pragma once

#include <vector>

#include "mapfuse/mesh.hpp"
#include "mapfuse/types.hpp"

namespace mapfuse {

// Scalar samples at the points of a regular lattice; index (i,j,k) sits at
// origin + voxel*(i,j,k). Values are stored x-fastest.
struct LatticeGrid {
  int nx = 0, ny = 0, nz = 0;  // lattice point counts per axis
  Vec3 origin = Vec3::Zero();
  double voxel = 0.1;
  std::vector<float> values;

  float at(int i, int j, int k) const {
    return values[(static_cast<size_t>(k) * ny + j) * nx + i];
  }
  Vec3 point(int i, int j, int k) const { return origin + voxel * Vec3(i, j, k); }
};

// Extracts the zero level set of the sampled field as a triangle mesh with
// outward (positive-side) winding. Vertices on shared lattice edges are
// welded, so the surface is watertight away from the grid boundary and the
// output is a pure function of the input samples. Face labels are left zero
// for the caller to annotate.
TriangleMesh marching_cubes(const LatticeGrid& grid);

}  // namespace mapfuse
