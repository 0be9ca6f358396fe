#include "mapfuse/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace mapfuse {

double face_area(const TriangleMesh& mesh, int face) {
  const auto& f = mesh.faces[face];
  const Vec3 e1 = mesh.vertices[f[1]] - mesh.vertices[f[0]];
  const Vec3 e2 = mesh.vertices[f[2]] - mesh.vertices[f[0]];
  return 0.5 * e1.cross(e2).norm();
}

Vec3 face_normal(const TriangleMesh& mesh, int face) {
  const auto& f = mesh.faces[face];
  const Vec3 e1 = mesh.vertices[f[1]] - mesh.vertices[f[0]];
  const Vec3 e2 = mesh.vertices[f[2]] - mesh.vertices[f[0]];
  const Vec3 n = e1.cross(e2);
  const double len = n.norm();
  if (len < 1e-18) return Vec3::UnitZ();
  return n / len;
}

double mesh_area(const TriangleMesh& mesh) {
  double a = 0.0;
  for (size_t i = 0; i < mesh.faces.size(); ++i)
    a += face_area(mesh, static_cast<int>(i));
  return a;
}

Aabb mesh_aabb(const TriangleMesh& mesh) {
  Aabb box;
  for (const auto& v : mesh.vertices) box.expand(v);
  return box;
}

void validate_mesh(const TriangleMesh& mesh, int class_count) {
  const int nv = static_cast<int>(mesh.vertices.size());
  for (size_t i = 0; i < mesh.faces.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      const int idx = mesh.faces[i][k];
      if (idx < 0 || idx >= nv)
        throw std::invalid_argument("mesh face " + std::to_string(i) +
                                    " references vertex " +
                                    std::to_string(idx) + " (have " +
                                    std::to_string(nv) + ")");
    }
  }
  if (mesh.face_labels.size() != mesh.faces.size())
    throw std::invalid_argument(
        "mesh has " + std::to_string(mesh.faces.size()) + " faces but " +
        std::to_string(mesh.face_labels.size()) + " face labels");
  if (class_count > 0) {
    for (size_t i = 0; i < mesh.face_labels.size(); ++i) {
      if (mesh.face_labels[i] >= class_count)
        throw std::invalid_argument(
            "face " + std::to_string(i) + " has label " +
            std::to_string(int(mesh.face_labels[i])) + " >= class count " +
            std::to_string(class_count));
    }
  }
}

std::vector<double> face_area_cdf(const TriangleMesh& mesh) {
  std::vector<double> cdf(mesh.faces.size());
  double acc = 0.0;
  for (size_t i = 0; i < mesh.faces.size(); ++i) {
    acc += face_area(mesh, static_cast<int>(i));
    cdf[i] = acc;
  }
  return cdf;
}

std::vector<SurfaceSample> sample_surface(const TriangleMesh& mesh, size_t n,
                                          Rng& rng) {
  const std::vector<double> cdf = face_area_cdf(mesh);
  if (cdf.empty() || cdf.back() <= 0.0)
    throw std::runtime_error("cannot sample a mesh with zero surface area");
  const double total = cdf.back();

  std::vector<SurfaceSample> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const double u = rng.uniform() * total;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    int face = static_cast<int>(std::min<size_t>(
        std::distance(cdf.begin(), it), cdf.size() - 1));
    const auto& f = mesh.faces[face];

    // Uniform barycentric point: reflect samples falling outside the triangle.
    double a = rng.uniform();
    double b = rng.uniform();
    if (a + b > 1.0) {
      a = 1.0 - a;
      b = 1.0 - b;
    }
    SurfaceSample s;
    s.point = mesh.vertices[f[0]] +
              a * (mesh.vertices[f[1]] - mesh.vertices[f[0]]) +
              b * (mesh.vertices[f[2]] - mesh.vertices[f[0]]);
    s.normal = face_normal(mesh, face);
    s.label = mesh.face_labels.empty() ? 0 : mesh.face_labels[face];
    s.face = face;
    out.push_back(s);
  }
  return out;
}

std::vector<Vec3> sample_uniform_in_aabb(const Aabb& box, size_t n, Rng& rng) {
  std::vector<Vec3> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) out.push_back(rng.uniform_in(box));
  return out;
}

void append_mesh(TriangleMesh& mesh, const TriangleMesh& other) {
  const int base = static_cast<int>(mesh.vertices.size());
  mesh.vertices.insert(mesh.vertices.end(), other.vertices.begin(),
                       other.vertices.end());
  for (const auto& f : other.faces)
    mesh.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
  mesh.face_labels.insert(mesh.face_labels.end(), other.face_labels.begin(),
                          other.face_labels.end());
}

void weld_mesh_vertices(TriangleMesh& mesh, double eps) {
  std::map<std::array<int64_t, 3>, int> slots;
  std::vector<Vec3> verts;
  std::vector<int> remap(mesh.vertices.size());
  for (size_t v = 0; v < mesh.vertices.size(); ++v) {
    const Vec3& p = mesh.vertices[v];
    const std::array<int64_t, 3> key{int64_t(std::llround(p.x() / eps)),
                                     int64_t(std::llround(p.y() / eps)),
                                     int64_t(std::llround(p.z() / eps))};
    const auto [it, fresh] = slots.try_emplace(key, int(verts.size()));
    if (fresh) verts.push_back(p);
    remap[v] = it->second;
  }
  mesh.vertices = std::move(verts);
  size_t kept = 0;
  for (size_t f = 0; f < mesh.faces.size(); ++f) {
    const std::array<int, 3> tri{remap[mesh.faces[f][0]],
                                 remap[mesh.faces[f][1]],
                                 remap[mesh.faces[f][2]]};
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) continue;
    mesh.faces[kept] = tri;
    if (f < mesh.face_labels.size()) mesh.face_labels[kept] = mesh.face_labels[f];
    ++kept;
  }
  mesh.faces.resize(kept);
  mesh.face_labels.resize(std::min(mesh.face_labels.size(), kept));
}

TriangleMesh transformed_mesh(const TriangleMesh& mesh, const Mat3& R,
                              const Vec3& t) {
  TriangleMesh out = mesh;
  for (auto& v : out.vertices) v = R * v + t;
  return out;
}

}  // namespace mapfuse
