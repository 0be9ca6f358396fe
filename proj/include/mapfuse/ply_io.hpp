#pragma once

#include <string>
#include <vector>

#include "mapfuse/mesh.hpp"

namespace mapfuse {

/// Contents of a PLY file. Faces may be empty (pure point cloud).
struct PlyData {
  TriangleMesh mesh;
  std::vector<float> vertex_confidence;  // empty when absent
  std::vector<uint8_t> vertex_labels;    // empty when absent
  bool had_vertex_labels = false;
};

/// Reads ascii or binary_little_endian PLY. Vertex positions are required;
/// a `semantic` (or `label`) property is picked up per face, or per vertex
/// and converted to per-face majority (ties -> smallest class id). Unknown
/// properties are skipped. Throws std::runtime_error on malformed input.
PlyData load_ply(const std::string& path);

/// load_ply + validate_mesh; requires faces.
TriangleMesh load_mesh_ply(const std::string& path, int class_count = 0);

/// Writes binary_little_endian PLY with per-face uchar `semantic` and,
/// when given, per-vertex float `confidence`.
void save_mesh_ply(const std::string& path, const TriangleMesh& mesh,
                   const std::vector<float>* vertex_confidence = nullptr);

}  // namespace mapfuse
