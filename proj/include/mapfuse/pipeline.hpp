#pragma once

#include <string>

#include "mapfuse/config.hpp"

namespace mapfuse {

struct FuseOptions {
  bool freeze_poses = false;
  std::string init_poses_path;  // empty: anchor at GPS
  int64_t iterations = -1;      // <0: iters_per_tile * tile count
  int log_every = 50;
};

/// Trains the fused field, then writes fused_model.bin, fused_mesh.ply,
/// poses.json, and loss_history.json under cfg.output_dir.
void run_fuse(const RunConfig& cfg, const FuseOptions& opt);

/// Classical registration; writes baseline_poses.json + baseline_report.json.
void run_align_baseline(const RunConfig& cfg);

/// Re-extracts a mesh from a saved model with the config's extraction
/// parameters; writes extracted.ply.
void run_extract(const RunConfig& cfg, const std::string& model_path);

struct EvalPaths {
  std::string pred_mesh;
  std::string ref_mesh;
  std::string est_poses;  // optional pair; both or neither
  std::string ref_poses;
  std::string report;  // defaults to output_dir/eval_report.json
};

/// Mesh-vs-reference scores (plus pose RMSEs when pose files are given);
/// prints a table and writes a JSON report stamped with the config hash.
void run_eval(const RunConfig& cfg, const EvalPaths& paths);

/// Evaluates the field at points from a whitespace x y z file; writes a
/// table of sdf / confidence / label per point.
void run_query(const RunConfig& cfg, const std::string& model_path,
               const std::string& points_path, const std::string& out_path);

/// Scene + session recipes -> session manifests, gt_map.ply, gt_poses.json.
void run_synth(const std::string& scene_json, const std::string& sessions_json,
               const std::string& out_dir);

}  // namespace mapfuse
