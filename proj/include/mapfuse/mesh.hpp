#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mapfuse/rng.hpp"
#include "mapfuse/types.hpp"

namespace mapfuse {

/// Triangle mesh with one semantic class id per face.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::vector<uint8_t> face_labels;

  bool empty() const { return faces.empty(); }
  size_t face_count() const { return faces.size(); }
  size_t vertex_count() const { return vertices.size(); }
};

struct SurfaceSample {
  Vec3 point;
  Vec3 normal;  // unit face normal
  uint8_t label = 0;
  int face = -1;
};

double face_area(const TriangleMesh& mesh, int face);
Vec3 face_normal(const TriangleMesh& mesh, int face);
double mesh_area(const TriangleMesh& mesh);
Aabb mesh_aabb(const TriangleMesh& mesh);

/// Throws std::invalid_argument on bad indices or label/face count mismatch,
/// and on labels >= class_count when class_count > 0.
void validate_mesh(const TriangleMesh& mesh, int class_count = 0);

/// Cumulative face-area table; degenerate faces get zero weight.
std::vector<double> face_area_cdf(const TriangleMesh& mesh);

/// Area-weighted surface sampling, uniform within each face.
/// Throws std::runtime_error when the mesh has zero total area.
std::vector<SurfaceSample> sample_surface(const TriangleMesh& mesh, size_t n,
                                          Rng& rng);

std::vector<Vec3> sample_uniform_in_aabb(const Aabb& box, size_t n, Rng& rng);

/// Appends `other` (vertices re-indexed) to `mesh`.
void append_mesh(TriangleMesh& mesh, const TriangleMesh& other);

/// Fuses vertices that coincide after snapping to an eps lattice and drops
/// faces collapsed by the merge. Keeps first-occurrence positions and order.
void weld_mesh_vertices(TriangleMesh& mesh, double eps);

/// Applies a rigid transform to all vertices.
TriangleMesh transformed_mesh(const TriangleMesh& mesh, const Mat3& R,
                              const Vec3& t);

}  // namespace mapfuse
