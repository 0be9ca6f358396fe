#include "mapfuse/config.hpp"

#include <fstream>
#include <stdexcept>

#include "json_util.hpp"

namespace mapfuse {
namespace {

using nlohmann::json;

json to_tree(const RunConfig& c) {
  const TrainSetup& t = c.train;
  json j;
  j["seed"] = c.seed;
  j["sessions"] = c.sessions;
  j["output_dir"] = c.output_dir;
  j["grid"] = {{"variant", t.grid_variant == GridVariant::kHash ? "hash" : "octree"},
               {"levels", t.hash.levels},
               {"feature_dim", t.hash.feature_dim},
               {"base_resolution", t.hash.base_resolution},
               {"max_resolution", t.hash.max_resolution},
               {"codebook_bits", t.hash.codebook_bits},
               {"octree_levels", t.octree.feature_levels},
               {"octree_leaf_m", t.octree.leaf_voxel_m},
               {"octree_feature_dim", t.octree.feature_dim}};
  j["posenc"] = {{"frequencies", t.posenc.num_frequencies},
                 {"include_raw", t.posenc.include_raw}};
  j["weights"] = {{"norm", t.weights.norm},
                  {"sem", t.weights.sem},
                  {"conf", t.weights.conf},
                  {"odom", t.weights.odom},
                  {"eik", t.weights.eik},
                  {"w_odom", {t.weights.w_odom[0], t.weights.w_odom[1],
                              t.weights.w_odom[2], t.weights.w_odom[3],
                              t.weights.w_odom[4], t.weights.w_odom[5]}}};
  j["train"] = {{"tile_side_m", t.tile_side_m},
                {"tile_halo_m", t.tile_halo_m},
                {"head_hidden", t.head_hidden},
                {"sigma_s_m", t.sigma_s_m},
                {"batch_surface", t.batch_surface},
                {"iters_per_tile", t.iters_per_tile},
                {"lod_period", t.lod_period},
                {"lr_field", t.lr_field},
                {"wd_field", t.wd_field},
                {"lr_translation", t.lr_translation},
                {"lr_rotation", t.lr_rotation},
                {"pose_clip", t.pose_clip},
                {"gauge_fix", t.gauge_fix},
                {"freeze_poses", t.freeze_poses},
                {"freeze_field", t.freeze_field}};
  j["extract"] = {{"voxel_m", c.extract.voxel_m},
                  {"conf_threshold", c.extract.conf_threshold},
                  {"pad_m", c.extract.pad_m}};
  const BaselineConfig& b = c.baseline;
  j["baseline"] = {{"points_per_submap", b.points_per_submap},
                   {"pairs_per_submap", b.pairs_per_submap},
                   {"huber_delta", b.huber_delta},
                   {"match_cap_m", b.match_cap_m},
                   {"use_covariances", b.use_covariances},
                   {"semantic_match", b.semantic_match},
                   {"covariance_neighbors", b.covariance_neighbors},
                   {"lambda_odom", b.lambda_odom},
                   {"lr_translation", b.lr_translation},
                   {"lr_rotation", b.lr_rotation},
                   {"grad_clip", b.grad_clip},
                   {"gauge_fix", b.gauge_fix},
                   {"max_iterations", b.max_iterations},
                   {"patience", b.patience}};
  j["eval"] = {{"threshold_m", c.eval.threshold_m},
               {"samples", c.eval.samples}};
  return j;
}

}  // namespace

std::string config_to_json(const RunConfig& cfg) {
  return to_tree(cfg).dump(2) + "\n";
}

RunConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("config parse error: ") + e.what());
  }
  RunConfig c;
  reject_unknown(j, to_tree(c), "");

  get_if(j, "seed", c.seed, "");
  get_if(j, "sessions", c.sessions, "");
  get_if(j, "output_dir", c.output_dir, "");
  TrainSetup& t = c.train;
  if (j.contains("grid")) {
    const json& g = j["grid"];
    std::string variant = "hash";
    get_if(g, "variant", variant, "grid");
    if (variant == "hash")
      t.grid_variant = GridVariant::kHash;
    else if (variant == "octree")
      t.grid_variant = GridVariant::kOctree;
    else
      throw std::runtime_error(
          "config key grid.variant: expected \"hash\" or \"octree\"");
    get_if(g, "levels", t.hash.levels, "grid");
    get_if(g, "feature_dim", t.hash.feature_dim, "grid");
    get_if(g, "base_resolution", t.hash.base_resolution, "grid");
    get_if(g, "max_resolution", t.hash.max_resolution, "grid");
    get_if(g, "codebook_bits", t.hash.codebook_bits, "grid");
    get_if(g, "octree_levels", t.octree.feature_levels, "grid");
    get_if(g, "octree_leaf_m", t.octree.leaf_voxel_m, "grid");
    get_if(g, "octree_feature_dim", t.octree.feature_dim, "grid");
  }
  if (j.contains("posenc")) {
    get_if(j["posenc"], "frequencies", t.posenc.num_frequencies, "posenc");
    get_if(j["posenc"], "include_raw", t.posenc.include_raw, "posenc");
  }
  if (j.contains("weights")) {
    const json& w = j["weights"];
    get_if(w, "norm", t.weights.norm, "weights");
    get_if(w, "sem", t.weights.sem, "weights");
    get_if(w, "conf", t.weights.conf, "weights");
    get_if(w, "odom", t.weights.odom, "weights");
    get_if(w, "eik", t.weights.eik, "weights");
    std::vector<double> wo;
    get_if(w, "w_odom", wo, "weights");
    if (!wo.empty()) {
      if (wo.size() != 6)
        throw std::runtime_error(
            "config key weights.w_odom: expected 6 entries");
      for (int a = 0; a < 6; ++a) t.weights.w_odom[a] = wo[a];
    }
  }
  if (j.contains("train")) {
    const json& tr = j["train"];
    get_if(tr, "tile_side_m", t.tile_side_m, "train");
    get_if(tr, "tile_halo_m", t.tile_halo_m, "train");
    get_if(tr, "head_hidden", t.head_hidden, "train");
    get_if(tr, "sigma_s_m", t.sigma_s_m, "train");
    get_if(tr, "batch_surface", t.batch_surface, "train");
    get_if(tr, "iters_per_tile", t.iters_per_tile, "train");
    get_if(tr, "lod_period", t.lod_period, "train");
    get_if(tr, "lr_field", t.lr_field, "train");
    get_if(tr, "wd_field", t.wd_field, "train");
    get_if(tr, "lr_translation", t.lr_translation, "train");
    get_if(tr, "lr_rotation", t.lr_rotation, "train");
    get_if(tr, "pose_clip", t.pose_clip, "train");
    get_if(tr, "gauge_fix", t.gauge_fix, "train");
    get_if(tr, "freeze_poses", t.freeze_poses, "train");
    get_if(tr, "freeze_field", t.freeze_field, "train");
  }
  if (j.contains("extract")) {
    const json& e = j["extract"];
    get_if(e, "voxel_m", c.extract.voxel_m, "extract");
    get_if(e, "conf_threshold", c.extract.conf_threshold, "extract");
    get_if(e, "pad_m", c.extract.pad_m, "extract");
  }
  if (j.contains("baseline")) {
    const json& b = j["baseline"];
    BaselineConfig& bc = c.baseline;
    get_if(b, "points_per_submap", bc.points_per_submap, "baseline");
    get_if(b, "pairs_per_submap", bc.pairs_per_submap, "baseline");
    get_if(b, "huber_delta", bc.huber_delta, "baseline");
    get_if(b, "match_cap_m", bc.match_cap_m, "baseline");
    get_if(b, "use_covariances", bc.use_covariances, "baseline");
    get_if(b, "semantic_match", bc.semantic_match, "baseline");
    get_if(b, "covariance_neighbors", bc.covariance_neighbors, "baseline");
    get_if(b, "lambda_odom", bc.lambda_odom, "baseline");
    get_if(b, "lr_translation", bc.lr_translation, "baseline");
    get_if(b, "lr_rotation", bc.lr_rotation, "baseline");
    get_if(b, "grad_clip", bc.grad_clip, "baseline");
    get_if(b, "gauge_fix", bc.gauge_fix, "baseline");
    get_if(b, "max_iterations", bc.max_iterations, "baseline");
    get_if(b, "patience", bc.patience, "baseline");
  }
  if (j.contains("eval")) {
    get_if(j["eval"], "threshold_m", c.eval.threshold_m, "eval");
    get_if(j["eval"], "samples", c.eval.samples, "eval");
  }

  c.train.seed = c.seed;
  c.baseline.seed = c.seed;
  c.baseline.w_odom = c.train.weights.w_odom;
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return config_from_json(text);
}

void save_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write config " + path);
  out << config_to_json(cfg);
}

uint64_t config_hash(const RunConfig& cfg) {
  uint64_t h = 1469598103934665603ull;  // FNV-1a 64
  for (const unsigned char ch : config_to_json(cfg)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace mapfuse
