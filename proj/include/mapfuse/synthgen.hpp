#pragma once

#include <map>
#include <string>
#include <vector>

#include "mapfuse/session.hpp"

namespace mapfuse {

/// Class ids used by the generator.
enum SynthClass : uint8_t {
  kRoad = 0,
  kMarking = 1,
  kSidewalk = 2,
  kBuilding = 3,
  kPole = 4,
  kVegetation = 5,
  kVehicle = 6,
  kOther = 7,
};

std::vector<std::string> synth_class_names();

/// Straight road corridor: tessellated road plane with dashed center
/// markings, raised sidewalk slabs, building boxes along both sides, pole
/// prisms, bush boxes, and optionally parked vehicles that exist only in
/// selected sessions (to exercise the confidence head).
struct SceneSpec {
  double road_length = 120.0;
  double road_width = 8.0;
  double marking_width = 0.15;
  double marking_dash = 3.0;
  double marking_gap = 9.0;
  double sidewalk_width = 2.0;
  double sidewalk_height = 0.15;
  int buildings_per_side = 4;
  Vec3 building_min_size = Vec3(8.0, 6.0, 6.0);   // along-road, depth, height
  Vec3 building_max_size = Vec3(16.0, 10.0, 12.0);
  double building_setback = 1.0;  // gap behind the sidewalk
  double pole_spacing = 30.0;     // 0 disables poles
  double pole_side = 0.15;
  double pole_height = 4.0;
  int bushes_per_side = 2;
  double tess = 2.0;  // max primitive facet edge length
  /// Parked vehicles: x position along the road, signed lane offset, and the
  /// session indices that observe them.
  struct Vehicle {
    double x = 0.0;
    double y = 0.0;
    std::vector<int> sessions;
  };
  std::vector<Vehicle> vehicles;
  uint64_t seed = 7;
};

/// Axis-aligned closed box primitive.
struct BoxPrim {
  Vec3 center = Vec3::Zero();
  Vec3 half = Vec3::Zero();
  uint8_t label = 0;
};

struct Scene {
  TriangleMesh mesh;  // static world, all faces labeled
  std::vector<std::string> class_names;
  std::vector<BoxPrim> boxes;  // static box primitives (area oracle)
  double road_area = 0.0;      // analytic plane areas by label
  double marking_area = 0.0;
  std::vector<BoxPrim> vehicle_boxes;          // parallel to vehicle_sessions
  std::vector<std::vector<int>> vehicle_sessions;
};

Scene generate_scene(const SceneSpec& spec);

/// Grid-tessellated axis-aligned box with outward winding.
TriangleMesh box_mesh(const BoxPrim& box, double tess);

/// Triangles clipped (not dropped) at the box boundary; labels preserved.
TriangleMesh clip_mesh_to_box(const TriangleMesh& mesh, const Aabb& box);

/// One traversal recipe. The trajectory runs lane-offset along the road,
/// direction +x when `reverse` is false. Poses sit on the road plane with x
/// forward.
struct SessionSpec {
  double lane_offset = 0.0;
  bool reverse = false;
  double start_margin = 2.0;       // trimmed from both road ends
  double keyframe_spacing = 5.0;   // meters between keyframes
  int keyframes_per_submap = 5;    // S
  double view_radius = 25.0;       // crop half-extent around the keyframe span
  double jitter_sigma = 0.0;       // per-vertex Gaussian, meters
  double label_flip_prob = 0.0;
  double face_dropout_prob = 0.0;
  double gps_sigma_trans = 1.0;    // per-axis, meters
  double gps_sigma_rot_deg = 2.0;  // per-axis rotation vector, degrees
  double odom_sigma_trans = 0.01;
  double odom_sigma_rot_deg = 0.05;
};

struct SynthResult {
  SessionSet set;
  std::map<int, RigidTransform> gt_poses;  // by global submap id
  TriangleMesh gt_map;                     // static scene (no vehicles)
};

/// Crops, re-expresses, and corrupts submaps per session. Deterministic from
/// scene.seed and the session order; empty crops are skipped with a warning
/// on stderr.
SynthResult generate_sessions(const SceneSpec& scene_spec,
                              const std::vector<SessionSpec>& sessions);

}  // namespace mapfuse
