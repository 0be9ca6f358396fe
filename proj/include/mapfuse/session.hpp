#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mapfuse/mesh.hpp"
#include "mapfuse/se3.hpp"

namespace mapfuse {

/// One mapping-session fragment: a labeled mesh in its local frame plus a
/// noisy GPS pose (world_T_submap) and, when a successor exists in the same
/// session, the measured odometry transform to it.
struct Submap {
  int id = -1;  // global, assigned in session load order
  int session_id = -1;
  int index_in_session = -1;
  std::string mesh_path;
  TriangleMesh mesh;
  RigidTransform gps_pose;
  std::optional<RigidTransform> odom_to_next;
  Aabb aabb_local;
};

struct Session {
  int session_id = -1;
  int class_count = 0;
  std::vector<std::string> class_names;
  std::vector<Submap> submaps;  // odom_to_next set for all but the last
};

struct SessionSet {
  std::vector<Session> sessions;
  int class_count = 0;
  std::vector<std::string> class_names;

  size_t submap_count() const;
  /// Flat view in global-id order.
  std::vector<const Submap*> all_submaps() const;
};

/// Parses a session manifest and loads the referenced meshes (paths are
/// relative to the manifest). Errors name the offending submap record.
/// Global ids are assigned starting at `first_id`.
Session load_session(const std::string& manifest_path, int first_id = 0);

/// Loads several manifests; class tables must agree across sessions.
SessionSet load_sessions(const std::vector<std::string>& manifest_paths);

/// Writes a session manifest plus its meshes under `dir`.
void save_session(const std::string& dir, const Session& session);

/// poses.json: global submap id -> 16 row-major floats (world_T_submap).
void save_poses(const std::string& path,
                const std::map<int, RigidTransform>& poses);
std::map<int, RigidTransform> load_poses(const std::string& path);

Mat4 pose_from_row_major(const std::vector<double>& v);
std::vector<double> pose_to_row_major(const Mat4& m);

}  // namespace mapfuse
