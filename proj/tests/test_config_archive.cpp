#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "mapfuse/archive.hpp"
#include "mapfuse/config.hpp"
#include "mapfuse/field.hpp"

using namespace mapfuse;

namespace {

std::string catch_message(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

Submap quad_submap(int id, double x0) {
  Submap sm;
  sm.id = id;
  sm.mesh.vertices = {Vec3(x0, 2, 0), Vec3(x0 + 20, 2, 0),
                      Vec3(x0 + 20, 22, 0), Vec3(x0, 22, 0)};
  sm.mesh.faces = {{0, 1, 2}, {0, 2, 3}};
  sm.mesh.face_labels = {1, 2};
  sm.aabb_local = mesh_aabb(sm.mesh);
  return sm;
}

SessionSet quad_set() {
  SessionSet set;
  set.class_names = {"a", "b", "c"};
  Session ses;
  ses.session_id = 0;
  ses.submaps = {quad_submap(0, 2.0), quad_submap(1, 6.0)};
  set.sessions.push_back(std::move(ses));
  return set;
}

TrainSetup tiny_setup() {
  TrainSetup s;
  s.tile_side_m = 32.0;
  s.tile_halo_m = 1.0;
  s.hash.levels = 2;
  s.hash.base_resolution = 4;
  s.hash.max_resolution = 8;
  s.hash.codebook_bits = 10;
  s.posenc.num_frequencies = 2;
  s.head_hidden = 8;
  s.seed = 5;
  return s;
}

}  // namespace

TEST_CASE("config: default roundtrip and stable hash") {
  RunConfig cfg;
  const std::string text = config_to_json(cfg);
  RunConfig back = config_from_json(text);

  CHECK(back.seed == cfg.seed);
  CHECK(back.output_dir == cfg.output_dir);
  CHECK(back.train.tile_side_m == cfg.train.tile_side_m);
  CHECK(back.train.hash.levels == cfg.train.hash.levels);
  CHECK(back.train.posenc.num_frequencies == cfg.train.posenc.num_frequencies);
  CHECK(back.train.weights.eik == cfg.train.weights.eik);
  CHECK(back.extract.voxel_m == cfg.extract.voxel_m);
  CHECK(back.baseline.huber_delta == cfg.baseline.huber_delta);
  CHECK(back.eval.samples == cfg.eval.samples);

  CHECK(config_hash(cfg) == config_hash(back));
  CHECK(config_hash(cfg) == config_hash(RunConfig{}));
  RunConfig other;
  other.train.tile_side_m = 64.0;
  CHECK(config_hash(other) != config_hash(cfg));
}

TEST_CASE("config: partial document overrides defaults and propagates seed") {
  const std::string text = R"({
    "seed": 9,
    "sessions": ["a/manifest.json", "b/manifest.json"],
    "grid": {"variant": "octree", "levels": 4},
    "train": {"batch_surface": 128, "lr_rotation": 0.002},
    "weights": {"w_odom": [1, 2, 3, 4, 5, 6]},
    "baseline": {"patience": 7},
    "eval": {"samples": 1234}
  })";
  RunConfig c = config_from_json(text);
  CHECK(c.seed == 9);
  CHECK(c.sessions.size() == 2);
  CHECK(c.train.grid_variant == GridVariant::kOctree);
  CHECK(c.train.hash.levels == 4);
  CHECK(c.train.batch_surface == 128);
  CHECK(c.train.lr_rotation == doctest::Approx(0.002));
  CHECK(c.train.seed == 9);
  CHECK(c.baseline.seed == 9);
  CHECK(c.baseline.patience == 7);
  CHECK(c.baseline.w_odom[0] == 1.0);
  CHECK(c.baseline.w_odom[5] == 6.0);
  CHECK(c.eval.samples == 1234);
  // Untouched sections keep their defaults.
  CHECK(c.extract.voxel_m == RunConfig{}.extract.voxel_m);
}

TEST_CASE("config: errors name the offending key path") {
  CHECK(catch_message([] { config_from_json(R"({"bogus": 1})"); }) ==
        "unknown config key: bogus");
  CHECK(catch_message([] {
          config_from_json(R"({"grid": {"levelz": 3}})");
        }) == "unknown config key: grid.levelz");
  CHECK(catch_message([] {
          config_from_json(R"({"weights": {"w_odom": [1, 2]}})");
        }) == "config key weights.w_odom: expected 6 entries");
  CHECK(catch_message([] {
          config_from_json(R"({"grid": {"variant": "quadtree"}})");
        }) == "config key grid.variant: expected \"hash\" or \"octree\"");
  CHECK(catch_message([] {
          config_from_json(R"({"train": {"batch_surface": "many"}})");
        }).find("config key train.batch_surface") == 0);
  CHECK(catch_message([] { config_from_json("{nope"); })
            .find("config parse error") == 0);
}

TEST_CASE("config: file save/load roundtrip") {
  const std::string path =
      (std::filesystem::temp_directory_path() / "mapfuse_cfg_test.json")
          .string();
  RunConfig cfg;
  cfg.seed = 77;
  cfg.sessions = {"x.json"};
  cfg.train.iters_per_tile = 12;
  save_config(path, cfg);
  RunConfig back = load_config(path);
  CHECK(back.seed == 77);
  CHECK(back.sessions == std::vector<std::string>{"x.json"});
  CHECK(back.train.iters_per_tile == 12);
  CHECK(config_hash(back) == config_hash(cfg));
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_config("/nonexistent/dir/cfg.json"),
                  std::runtime_error);
}

TEST_CASE("archive: bitwise model roundtrip") {
  SessionSet set = quad_set();
  TrainSetup setup = tiny_setup();
  auto model = build_model<float>(set, setup);
  REQUIRE(!model.grids.empty());
  model.poses[1].xi << 0.05, -0.02, 0.01, 0.004, -0.003, 0.002;

  const std::string path =
      (std::filesystem::temp_directory_path() / "mapfuse_model_test.bin")
          .string();
  const std::vector<std::string> names = {"a", "b", "c"};
  save_model(path, model, 0xDEADBEEFCAFEF00Dull, names);
  ModelArchive arc = load_model(path);

  CHECK(arc.config_hash == 0xDEADBEEFCAFEF00Dull);
  CHECK(arc.class_names == names);
  CHECK(arc.model.setup.seed == setup.seed);
  CHECK(arc.model.setup.head_hidden == setup.head_hidden);
  CHECK(arc.model.setup.posenc.num_frequencies == 2);

  const Tiling& a = model.tiling;
  const Tiling& b = arc.model.tiling;
  CHECK(b.tile_side == a.tile_side);
  CHECK(b.halo == a.halo);
  REQUIRE(b.tiles.size() == a.tiles.size());
  for (size_t t = 0; t < a.tiles.size(); ++t) {
    CHECK(b.tiles[t].tile.ix == a.tiles[t].tile.ix);
    CHECK(b.tiles[t].tile.iy == a.tiles[t].tile.iy);
    CHECK(b.tiles[t].z_min == a.tiles[t].z_min);
    CHECK(b.tiles[t].z_max == a.tiles[t].z_max);
    CHECK(b.tiles[t].submap_ids == a.tiles[t].submap_ids);
  }

  REQUIRE(arc.model.norms.size() == model.norms.size());
  for (size_t t = 0; t < model.norms.size(); ++t) {
    CHECK(arc.model.norms[t].origin == model.norms[t].origin);
    CHECK(arc.model.norms[t].span == model.norms[t].span);
  }

  REQUIRE(arc.model.grids.size() == model.grids.size());
  for (size_t t = 0; t < model.grids.size(); ++t) {
    const auto& ga = model.grids[t];
    const auto& gb = arc.model.grids[t];
    CHECK(gb.variant == ga.variant);
    CHECK(gb.feature_dim == ga.feature_dim);
    CHECK(gb.active_levels == ga.active_levels);
    REQUIRE(gb.levels.size() == ga.levels.size());
    for (size_t l = 0; l < ga.levels.size(); ++l) {
      CHECK(gb.levels[l].scale == ga.levels[l].scale);
      CHECK(gb.levels[l].max_cell == ga.levels[l].max_cell);
      CHECK(gb.levels[l].dense_corners == ga.levels[l].dense_corners);
      CHECK(gb.levels[l].hash_mask == ga.levels[l].hash_mask);
      CHECK(gb.levels[l].slot_offset == ga.levels[l].slot_offset);
      CHECK(gb.levels[l].slot_count == ga.levels[l].slot_count);
      CHECK(gb.levels[l].corner_keys == ga.levels[l].corner_keys);
    }
    CHECK(gb.params == ga.params);  // float-exact
  }

  CHECK(arc.model.heads.geo.param_vector() == model.heads.geo.param_vector());
  CHECK(arc.model.heads.sem.param_vector() == model.heads.sem.param_vector());
  CHECK(arc.model.heads.class_count == model.heads.class_count);
  CHECK(arc.model.heads.grid_dim == model.heads.grid_dim);

  REQUIRE(arc.model.poses.size() == model.poses.size());
  for (size_t i = 0; i < model.poses.size(); ++i) {
    CHECK(arc.model.poses[i].xi == model.poses[i].xi);
    CHECK((arc.model.poses[i].anchor.R - model.poses[i].anchor.R).norm() == 0.0);
    CHECK(arc.model.poses[i].anchor.t == model.poses[i].anchor.t);
  }
  REQUIRE(arc.model.submaps.size() == model.submaps.size());
  for (size_t i = 0; i < model.submaps.size(); ++i) {
    CHECK(arc.model.submaps[i]->aabb_local.min ==
          model.submaps[i]->aabb_local.min);
    CHECK(arc.model.submaps[i]->aabb_local.max ==
          model.submaps[i]->aabb_local.max);
  }

  // The restored field evaluates identically.
  Rng rng(123);
  for (int k = 0; k < 8; ++k) {
    const size_t t = k % model.grids.size();
    const Vec3 p = rng.uniform_in(model.tiling.tile_box(int(t)));
    FieldOutput fa = field_forward(model.grids[t], model.heads,
                                   model.norms[t], p);
    FieldOutput fb = field_forward(arc.model.grids[t], arc.model.heads,
                                   arc.model.norms[t], p);
    CHECK(fa.sdf == fb.sdf);
    CHECK(fa.confidence == fb.confidence);
    CHECK(fa.logits == fb.logits);
  }
  std::remove(path.c_str());
}

TEST_CASE("archive: octree variant roundtrips too") {
  SessionSet set = quad_set();
  TrainSetup setup = tiny_setup();
  setup.grid_variant = GridVariant::kOctree;
  setup.octree.feature_levels = 3;
  setup.octree.leaf_voxel_m = 1.0;
  auto model = build_model<float>(set, setup);
  REQUIRE(!model.grids.empty());
  REQUIRE(model.grids[0].variant == GridVariant::kOctree);

  const std::string path =
      (std::filesystem::temp_directory_path() / "mapfuse_model_oct.bin")
          .string();
  save_model(path, model, 1, {"a", "b", "c"});
  ModelArchive arc = load_model(path);
  CHECK(arc.model.setup.grid_variant == GridVariant::kOctree);
  REQUIRE(arc.model.grids.size() == model.grids.size());
  for (size_t t = 0; t < model.grids.size(); ++t) {
    CHECK(arc.model.grids[t].params == model.grids[t].params);
    CHECK(arc.model.grids[t].levels.size() == model.grids[t].levels.size());
    for (size_t l = 0; l < model.grids[t].levels.size(); ++l) {
      CHECK(arc.model.grids[t].levels[l].corner_keys ==
            model.grids[t].levels[l].corner_keys);
      CHECK(arc.model.grids[t].levels[l].slot_map ==
            model.grids[t].levels[l].slot_map);
    }
  }
  std::remove(path.c_str());
}

TEST_CASE("archive: corrupted and truncated files are rejected") {
  SessionSet set = quad_set();
  auto model = build_model<float>(set, tiny_setup());
  const auto dir = std::filesystem::temp_directory_path();
  const std::string good = (dir / "mapfuse_arc_good.bin").string();
  save_model(good, model, 2, {"a", "b", "c"});

  // Flip the magic.
  std::string bytes;
  {
    std::ifstream in(good, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in),
                 std::istreambuf_iterator<char>());
  }
  REQUIRE(bytes.size() > 64);
  const std::string bad_magic = (dir / "mapfuse_arc_magic.bin").string();
  {
    std::string b = bytes;
    b[0] = char(b[0] ^ 0x5a);
    std::ofstream out(bad_magic, std::ios::binary);
    out << b;
  }
  CHECK(catch_message([&] { load_model(bad_magic); })
            .find("not a fused-model archive") != std::string::npos);

  const std::string cut = (dir / "mapfuse_arc_cut.bin").string();
  {
    std::ofstream out(cut, std::ios::binary);
    out << bytes.substr(0, 40);
  }
  CHECK(catch_message([&] { load_model(cut); }).find("truncated archive") !=
        std::string::npos);

  CHECK_THROWS_AS(load_model((dir / "mapfuse_arc_missing.bin").string()),
                  std::runtime_error);
  for (const auto& p : {good, bad_magic, cut}) std::remove(p.c_str());
}
