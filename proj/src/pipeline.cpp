#include "mapfuse/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "json_util.hpp"
#include "mapfuse/archive.hpp"
#include "mapfuse/metrics.hpp"
#include "mapfuse/synthgen.hpp"

namespace fs = std::filesystem;

namespace mapfuse {
namespace {

using nlohmann::json;

std::string hash_string(uint64_t h) {
  std::ostringstream os;
  os << "0x" << std::hex << std::setfill('0') << std::setw(16) << h;
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

json scene_tree(const SceneSpec& s) {
  json j;
  j["road_length"] = s.road_length;
  j["road_width"] = s.road_width;
  j["marking_width"] = s.marking_width;
  j["marking_dash"] = s.marking_dash;
  j["marking_gap"] = s.marking_gap;
  j["sidewalk_width"] = s.sidewalk_width;
  j["sidewalk_height"] = s.sidewalk_height;
  j["buildings_per_side"] = s.buildings_per_side;
  j["building_min_size"] = {s.building_min_size.x(), s.building_min_size.y(),
                            s.building_min_size.z()};
  j["building_max_size"] = {s.building_max_size.x(), s.building_max_size.y(),
                            s.building_max_size.z()};
  j["building_setback"] = s.building_setback;
  j["pole_spacing"] = s.pole_spacing;
  j["pole_side"] = s.pole_side;
  j["pole_height"] = s.pole_height;
  j["bushes_per_side"] = s.bushes_per_side;
  j["tess"] = s.tess;
  j["seed"] = s.seed;
  j["vehicles"] = json::array();
  for (const auto& v : s.vehicles)
    j["vehicles"].push_back(
        {{"x", v.x}, {"y", v.y}, {"sessions", v.sessions}});
  return j;
}

SceneSpec parse_scene(const json& j) {
  SceneSpec s;
  json schema = scene_tree(s);
  schema["vehicles"] = json::array({json{{"x", 0.0}, {"y", 0.0}, {"sessions", json::array()}}});
  reject_unknown(j, schema, "scene");
  get_if(j, "road_length", s.road_length, "scene");
  get_if(j, "road_width", s.road_width, "scene");
  get_if(j, "marking_width", s.marking_width, "scene");
  get_if(j, "marking_dash", s.marking_dash, "scene");
  get_if(j, "marking_gap", s.marking_gap, "scene");
  get_if(j, "sidewalk_width", s.sidewalk_width, "scene");
  get_if(j, "sidewalk_height", s.sidewalk_height, "scene");
  get_if(j, "buildings_per_side", s.buildings_per_side, "scene");
  std::vector<double> v3;
  get_if(j, "building_min_size", v3, "scene");
  if (v3.size() == 3) s.building_min_size = Vec3(v3[0], v3[1], v3[2]);
  v3.clear();
  get_if(j, "building_max_size", v3, "scene");
  if (v3.size() == 3) s.building_max_size = Vec3(v3[0], v3[1], v3[2]);
  get_if(j, "building_setback", s.building_setback, "scene");
  get_if(j, "pole_spacing", s.pole_spacing, "scene");
  get_if(j, "pole_side", s.pole_side, "scene");
  get_if(j, "pole_height", s.pole_height, "scene");
  get_if(j, "bushes_per_side", s.bushes_per_side, "scene");
  get_if(j, "tess", s.tess, "scene");
  get_if(j, "seed", s.seed, "scene");
  if (j.contains("vehicles")) {
    for (size_t i = 0; i < j["vehicles"].size(); ++i) {
      const json& vj = j["vehicles"][i];
      SceneSpec::Vehicle v;
      const std::string p = "scene.vehicles[" + std::to_string(i) + "]";
      get_if(vj, "x", v.x, p);
      get_if(vj, "y", v.y, p);
      get_if(vj, "sessions", v.sessions, p);
      s.vehicles.push_back(v);
    }
  }
  return s;
}

json session_tree(const SessionSpec& s) {
  return json{{"lane_offset", s.lane_offset},
              {"reverse", s.reverse},
              {"start_margin", s.start_margin},
              {"keyframe_spacing", s.keyframe_spacing},
              {"keyframes_per_submap", s.keyframes_per_submap},
              {"view_radius", s.view_radius},
              {"jitter_sigma", s.jitter_sigma},
              {"label_flip_prob", s.label_flip_prob},
              {"face_dropout_prob", s.face_dropout_prob},
              {"gps_sigma_trans", s.gps_sigma_trans},
              {"gps_sigma_rot_deg", s.gps_sigma_rot_deg},
              {"odom_sigma_trans", s.odom_sigma_trans},
              {"odom_sigma_rot_deg", s.odom_sigma_rot_deg}};
}

std::vector<SessionSpec> parse_sessions(const json& root) {
  const json* arr = &root;
  if (root.is_object()) {
    json schema;
    schema["sessions"] = json::array();
    reject_unknown(root, schema, "");
    if (!root.contains("sessions"))
      throw std::runtime_error("sessions file: missing \"sessions\" array");
    arr = &root.at("sessions");
  }
  if (!arr->is_array())
    throw std::runtime_error("sessions file: expected an array of sessions");
  std::vector<SessionSpec> out;
  const json schema = session_tree(SessionSpec{});
  for (size_t i = 0; i < arr->size(); ++i) {
    const std::string p = "sessions[" + std::to_string(i) + "]";
    const json& sj = (*arr)[i];
    reject_unknown(sj, schema, p);
    SessionSpec s;
    get_if(sj, "lane_offset", s.lane_offset, p);
    get_if(sj, "reverse", s.reverse, p);
    get_if(sj, "start_margin", s.start_margin, p);
    get_if(sj, "keyframe_spacing", s.keyframe_spacing, p);
    get_if(sj, "keyframes_per_submap", s.keyframes_per_submap, p);
    get_if(sj, "view_radius", s.view_radius, p);
    get_if(sj, "jitter_sigma", s.jitter_sigma, p);
    get_if(sj, "label_flip_prob", s.label_flip_prob, p);
    get_if(sj, "face_dropout_prob", s.face_dropout_prob, p);
    get_if(sj, "gps_sigma_trans", s.gps_sigma_trans, p);
    get_if(sj, "gps_sigma_rot_deg", s.gps_sigma_rot_deg, p);
    get_if(sj, "odom_sigma_trans", s.odom_sigma_trans, p);
    get_if(sj, "odom_sigma_rot_deg", s.odom_sigma_rot_deg, p);
    out.push_back(s);
  }
  return out;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

json history_tree(const std::vector<LossReport>& history, uint64_t hash,
                  uint64_t seed) {
  json rows = json::array();
  for (const LossReport& r : history)
    rows.push_back({r.iteration, r.tile, r.total, r.sdf, r.norm, r.sem, r.eik,
                    r.conf, r.odom, r.n_surf, r.n_space});
  return json{{"config_hash", hash_string(hash)},
              {"seed", seed},
              {"columns", {"iteration", "tile", "total", "sdf", "norm", "sem",
                           "eik", "conf", "odom", "n_surf", "n_space"}},
              {"rows", rows}};
}

}  // namespace

void run_synth(const std::string& scene_json, const std::string& sessions_json,
               const std::string& out_dir) {
  const SceneSpec scene = parse_scene(load_json_file(scene_json));
  const std::vector<SessionSpec> specs =
      parse_sessions(load_json_file(sessions_json));
  if (specs.empty()) throw std::runtime_error("sessions file lists no sessions");

  SynthResult synth = generate_sessions(scene, specs);
  fs::create_directories(out_dir);
  for (const Session& s : synth.set.sessions) {
    const fs::path dir = fs::path(out_dir) / ("session_" + std::to_string(s.session_id));
    save_session(dir.string(), s);
    std::cout << "session " << s.session_id << ": " << s.submaps.size()
              << " submaps -> " << (dir / "session.json").string() << "\n";
  }
  save_mesh_ply((fs::path(out_dir) / "gt_map.ply").string(), synth.gt_map);
  save_poses((fs::path(out_dir) / "gt_poses.json").string(), synth.gt_poses);
  std::cout << "gt map: " << synth.gt_map.face_count() << " faces; "
            << synth.gt_poses.size() << " gt poses\n";
}

void run_fuse(const RunConfig& cfg, const FuseOptions& opt) {
  if (cfg.sessions.empty())
    throw std::runtime_error("config lists no session manifests");
  const SessionSet set = load_sessions(cfg.sessions);
  const uint64_t hash = config_hash(cfg);

  TrainSetup setup = cfg.train;
  if (opt.freeze_poses) setup.freeze_poses = true;
  std::map<int, RigidTransform> init;
  const std::map<int, RigidTransform>* initp = nullptr;
  if (!opt.init_poses_path.empty()) {
    init = load_poses(opt.init_poses_path);
    initp = &init;
  }

  FusionModel<float> model = build_model<float>(set, setup, initp);
  Trainer<float> trainer(model);
  const int64_t total =
      opt.iterations >= 0 ? opt.iterations : trainer.default_total_iterations();
  std::cout << "fusing " << set.submap_count() << " submaps over "
            << model.tiling.tiles.size() << " tiles, " << total
            << " iterations\n";

  std::vector<LossReport> history;
  history.reserve(size_t(total));
  trainer.run(total, &history,
              [](const LossReport& r) {
                std::cout << "it " << r.iteration << " tile " << r.tile
                          << " total " << r.total << " sdf " << r.sdf
                          << " eik " << r.eik << " conf " << r.conf << " odom "
                          << r.odom << "\n";
              },
              opt.log_every);

  fs::create_directories(cfg.output_dir);
  const fs::path dir(cfg.output_dir);
  save_model((dir / "fused_model.bin").string(), model, hash,
             set.class_names);
  save_poses((dir / "poses.json").string(), model.pose_map());
  write_text(dir / "loss_history.json",
             history_tree(history, hash, cfg.seed).dump(2) + "\n");

  const ExtractedMesh fused = extract_fused(model, cfg.extract);
  save_mesh_ply((dir / "fused_mesh.ply").string(), fused.mesh,
                &fused.vertex_confidence);
  std::cout << "fused mesh: " << fused.mesh.vertex_count() << " vertices, "
            << fused.mesh.face_count() << " faces -> "
            << (dir / "fused_mesh.ply").string() << "\n";
}

void run_align_baseline(const RunConfig& cfg) {
  if (cfg.sessions.empty())
    throw std::runtime_error("config lists no session manifests");
  const SessionSet set = load_sessions(cfg.sessions);
  const BaselineResult res = align_baseline(set, cfg.baseline);

  fs::create_directories(cfg.output_dir);
  const fs::path dir(cfg.output_dir);
  save_poses((dir / "baseline_poses.json").string(), res.poses);
  json j{{"config_hash", hash_string(config_hash(cfg))},
         {"best_cost", res.best_cost},
         {"best_iteration", res.best_iteration},
         {"iterations_run", res.iterations_run},
         {"cost_history", res.cost_history}};
  write_text(dir / "baseline_report.json", j.dump(2) + "\n");
  std::cout << "baseline: best cost " << res.best_cost << " at iteration "
            << res.best_iteration << " (" << res.iterations_run << " run) -> "
            << (dir / "baseline_poses.json").string() << "\n";
}

void run_extract(const RunConfig& cfg, const std::string& model_path) {
  const std::string path = model_path.empty()
                               ? (fs::path(cfg.output_dir) / "fused_model.bin").string()
                               : model_path;
  const ModelArchive arc = load_model(path);
  const ExtractedMesh out = extract_fused(arc.model, cfg.extract);
  fs::create_directories(cfg.output_dir);
  const fs::path mesh_path = fs::path(cfg.output_dir) / "extracted.ply";
  save_mesh_ply(mesh_path.string(), out.mesh, &out.vertex_confidence);
  std::cout << "extracted " << out.mesh.face_count() << " faces at voxel "
            << cfg.extract.voxel_m << " m, c_th " << cfg.extract.conf_threshold
            << " -> " << mesh_path.string() << "\n";
}

void run_eval(const RunConfig& cfg, const EvalPaths& paths) {
  const PlyData pred = load_ply(paths.pred_mesh);
  if (pred.mesh.faces.empty())
    throw std::runtime_error(paths.pred_mesh + ": prediction has no faces");
  const PlyData ref = load_ply(paths.ref_mesh);

  Rng rng(mix_seed(cfg.seed, 0xE7A1u, 0));
  const LabeledPoints pred_pts =
      sample_labeled_points(pred.mesh, cfg.eval.samples, rng);
  const LabeledPoints ref_pts =
      reference_points(ref, cfg.eval.samples, cfg.seed);
  const ReconScores rs =
      recon_scores(pred_pts, ref_pts, cfg.eval.threshold_m);

  json j{{"config_hash", hash_string(config_hash(cfg))},
         {"seed", cfg.seed},
         {"threshold_m", rs.threshold},
         {"geometric",
          {{"accuracy", rs.accuracy},
           {"completeness", rs.completeness},
           {"fscore", rs.fscore}}},
         {"semantic",
          {{"mean_fscore", rs.semantic_fscore},
           {"class_fscore", rs.class_fscore}}}};

  std::cout << std::fixed << std::setprecision(4);
  std::cout << "geometric  accuracy " << rs.accuracy << "  completeness "
            << rs.completeness << "  fscore " << rs.fscore << " (d = "
            << rs.threshold << " m)\n";
  std::cout << "semantic   mean fscore " << rs.semantic_fscore << "\n";

  if (!paths.est_poses.empty() || !paths.ref_poses.empty()) {
    if (paths.est_poses.empty() || paths.ref_poses.empty())
      throw std::runtime_error("pose evaluation needs both --poses and --gt-poses");
    const PoseScores ps =
        pose_scores(load_poses(paths.est_poses), load_poses(paths.ref_poses));
    j["poses"] = {{"translation_rmse", ps.translation_rmse},
                  {"rotation_rmse_deg", ps.rotation_rmse_deg},
                  {"count", ps.count}};
    std::cout << "poses      translation rmse " << ps.translation_rmse
              << " m  rotation rmse " << ps.rotation_rmse_deg << " deg  ("
              << ps.count << " poses)\n";
  }

  const std::string report =
      paths.report.empty()
          ? (fs::path(cfg.output_dir) / "eval_report.json").string()
          : paths.report;
  fs::create_directories(fs::path(report).parent_path().empty()
                             ? "."
                             : fs::path(report).parent_path().string());
  write_text(report, j.dump(2) + "\n");
  std::cout << "report -> " << report << "\n";
}

void run_query(const RunConfig& cfg, const std::string& model_path,
               const std::string& points_path, const std::string& out_path) {
  const std::string path = model_path.empty()
                               ? (fs::path(cfg.output_dir) / "fused_model.bin").string()
                               : model_path;
  const ModelArchive arc = load_model(path);
  std::ifstream in(points_path);
  if (!in) throw std::runtime_error("cannot read " + points_path);

  std::ostringstream table;
  table << "# x y z sdf confidence label name\n";
  double x, y, z;
  while (in >> x >> y >> z) {
    const Vec3 p(x, y, z);
    table << x << " " << y << " " << z << " ";
    const auto tile = arc.model.tiling.route_point(p);
    if (!tile) {
      table << "nan nan -1 unmapped\n";
      continue;
    }
    const FieldOutput f =
        field_forward(arc.model.grids[*tile], arc.model.heads,
                      arc.model.norms[*tile], p);
    int best = 0;
    for (int k = 1; k < int(f.logits.size()); ++k)
      if (f.logits[k] > f.logits[best]) best = k;
    const std::string name = best < int(arc.class_names.size())
                                 ? arc.class_names[best]
                                 : std::to_string(best);
    table << f.sdf << " " << f.confidence << " " << best << " " << name
          << "\n";
  }
  write_text(out_path, table.str());
  std::cout << "query table -> " << out_path << "\n";
}

}  // namespace mapfuse
