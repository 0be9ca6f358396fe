#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mapfuse/config.hpp"
#include "mapfuse/pipeline.hpp"

namespace {

mapfuse::RunConfig load_or_default(const std::string& path) {
  if (path.empty()) return mapfuse::RunConfig{};
  return mapfuse::load_config(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mapfuse: multi-session semantic mesh fusion via a tiled neural SDF"};
  app.require_subcommand(0, 1);

  std::string config_path;
  std::string write_default;
  int threads = 0;
  app.add_option("--config", config_path, "run configuration JSON")
      ->envname("MAPFUSE_CONFIG");
  app.add_option("--write-default-config", write_default,
                 "write a fully populated default config to this path and exit");
  app.add_option("--threads", threads,
                 "worker thread cap (reserved; current build is single-threaded)");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark");
  std::string scene_json, sessions_json, synth_out = "synth";
  synth->add_option("--scene", scene_json, "scene spec JSON")->required();
  synth->add_option("--sessions", sessions_json, "session specs JSON")->required();
  synth->add_option("--out", synth_out, "output directory");

  // fuse
  auto* fuse = app.add_subcommand("fuse", "train the fused model from sessions");
  mapfuse::FuseOptions fuse_opt;
  std::vector<std::string> fuse_sessions;
  std::string fuse_out;
  fuse->add_flag("--freeze-poses", fuse_opt.freeze_poses,
                 "keep poses at initialization");
  fuse->add_option("--init-poses", fuse_opt.init_poses_path,
                   "poses.json overriding GPS initialization");
  fuse->add_option("--iterations", fuse_opt.iterations,
                   "total training iterations (default from config)");
  fuse->add_option("--log-every", fuse_opt.log_every, "console log period");
  fuse->add_option("--sessions", fuse_sessions,
                   "session manifests (overrides config list)");
  fuse->add_option("--out", fuse_out, "output directory (overrides config)");

  // align-baseline
  auto* base = app.add_subcommand("align-baseline",
                                  "classical factor-graph ICP/GICP alignment");
  std::string base_mode = "gicp";
  bool base_semantic = false;
  std::vector<std::string> base_sessions;
  std::string base_out;
  base->add_option("--mode", base_mode, "icp or gicp")
      ->check(CLI::IsMember({"icp", "gicp"}));
  base->add_flag("--semantic", base_semantic, "match only within a label");
  base->add_option("--sessions", base_sessions,
                   "session manifests (overrides config list)");
  base->add_option("--out", base_out, "output directory (overrides config)");

  // extract
  auto* extract = app.add_subcommand("extract", "mesh a trained model");
  std::string extract_model;
  double voxel = -1, conf_th = -1;
  extract->add_option("--model", extract_model,
                      "fused_model.bin (default <out>/fused_model.bin)");
  extract->add_option("--voxel", voxel, "marching-cubes voxel size [m]");
  extract->add_option("--conf-threshold", conf_th, "confidence mask threshold");
  std::string extract_out;
  extract->add_option("--out", extract_out, "output directory (overrides config)");

  // eval
  auto* eval = app.add_subcommand("eval", "score a reconstruction against reference");
  mapfuse::EvalPaths paths;
  double eval_d = -1;
  eval->add_option("--recon", paths.pred_mesh, "predicted mesh PLY")->required();
  eval->add_option("--gt", paths.ref_mesh, "reference mesh or point cloud PLY")
      ->required();
  eval->add_option("--poses", paths.est_poses, "estimated poses.json");
  eval->add_option("--gt-poses", paths.ref_poses, "reference poses.json");
  eval->add_option("--d", eval_d, "distance threshold [m]");
  eval->add_option("--report", paths.report, "report JSON path");

  // query
  auto* query = app.add_subcommand("query", "evaluate the field at points from a file");
  std::string query_model, query_points, query_out = "query.txt";
  query->add_option("--model", query_model,
                    "fused_model.bin (default <out>/fused_model.bin)");
  query->add_option("--points", query_points, "text file of x y z rows")->required();
  query->add_option("--out", query_out, "output table path");

  CLI11_PARSE(app, argc, argv);
  (void)threads;  // reserved: this build runs deterministic single-threaded loops

  try {
    if (!write_default.empty()) {
      mapfuse::save_config(write_default, mapfuse::RunConfig{});
      std::cout << "default config -> " << write_default << "\n";
      return 0;
    }
    if (app.get_subcommands().empty()) {
      std::cerr << "error: no command given (see --help)\n";
      return 2;
    }

    mapfuse::RunConfig cfg = load_or_default(config_path);

    if (synth->parsed()) {
      mapfuse::run_synth(scene_json, sessions_json, synth_out);
    } else if (fuse->parsed()) {
      if (!fuse_sessions.empty()) cfg.sessions = fuse_sessions;
      if (!fuse_out.empty()) cfg.output_dir = fuse_out;
      mapfuse::run_fuse(cfg, fuse_opt);
    } else if (base->parsed()) {
      if (!base_sessions.empty()) cfg.sessions = base_sessions;
      if (!base_out.empty()) cfg.output_dir = base_out;
      cfg.baseline.use_covariances = (base_mode == "gicp");
      if (base_semantic) cfg.baseline.semantic_match = true;
      mapfuse::run_align_baseline(cfg);
    } else if (extract->parsed()) {
      if (!extract_out.empty()) cfg.output_dir = extract_out;
      if (voxel > 0) cfg.extract.voxel_m = voxel;
      if (conf_th >= 0) cfg.extract.conf_threshold = conf_th;
      mapfuse::run_extract(cfg, extract_model);
    } else if (eval->parsed()) {
      if (eval_d > 0) cfg.eval.threshold_m = eval_d;
      mapfuse::run_eval(cfg, paths);
    } else if (query->parsed()) {
      mapfuse::run_query(cfg, query_model, query_points, query_out);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error (invalid input): " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
