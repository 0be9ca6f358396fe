#include <cmath>

#include "doctest.h"
#include "mapfuse/trainer.hpp"

using namespace mapfuse;

namespace {

SessionSet tiny_set() {
  SessionSet set;
  set.class_count = 3;
  set.class_names = {"road", "building", "other"};
  Session s;
  s.session_id = 0;
  s.class_count = 3;
  s.class_names = set.class_names;
  for (int i = 0; i < 2; ++i) {
    Submap sm;
    sm.id = i;
    sm.session_id = 0;
    sm.index_in_session = i;
    sm.mesh.vertices = {{0, 0, 0}, {4, 0, 0}, {4, 4, 0}, {0, 4, 0},
                        {1, 1, 0}, {3, 1, 0}, {2, 3, 2}};
    sm.mesh.faces = {{0, 1, 2}, {0, 2, 3}, {4, 5, 6}};
    sm.mesh.face_labels = {0, 0, 1};
    sm.aabb_local = mesh_aabb(sm.mesh);
    sm.gps_pose.t = Vec3(2.0 * i, 0.5 * i, 0);
    sm.gps_pose.R = so3_exp(Vec3(0, 0, 0.05 * i));
    if (i == 0) {
      RigidTransform odom;
      odom.t = Vec3(-2.0, -0.5, 0);
      sm.odom_to_next = odom;
    }
    s.submaps.push_back(std::move(sm));
  }
  set.sessions = {s};
  return set;
}

TrainSetup tiny_setup() {
  TrainSetup setup;
  setup.tile_side_m = 32.0;
  setup.tile_halo_m = 2.0;
  setup.hash.levels = 2;
  setup.hash.feature_dim = 2;
  setup.hash.base_resolution = 4;
  setup.hash.max_resolution = 8;
  setup.hash.codebook_bits = 10;
  setup.posenc.num_frequencies = 2;
  setup.head_hidden = 8;
  setup.batch_surface = 16;
  setup.lod_period = 0;  // all levels on
  setup.seed = 9;
  return setup;
}

}  // namespace

TEST_CASE("trainer analytic gradients vs finite differences (sampled)") {
  const SessionSet set = tiny_set();
  TrainSetup setup = tiny_setup();
  FusionModel<double> model = build_model<double>(set, setup);
  REQUIRE(model.tiling.tiles.size() >= 1);

  Trainer<double> trainer(model);
  GradSnapshot snap;
  const LossReport base = trainer.compute_gradients(0, &snap);
  CHECK(base.n_surf > 0);

  const double h = 1e-5;
  auto loss_at = [&]() {
    Trainer<double> probe(model);
    return probe.evaluate(0).total;
  };

  // Pose coordinates: every one of the 12.
  for (int i = 0; i < 2; ++i)
    for (int d = 0; d < 6; ++d) {
      const double save = model.poses[i].xi[d];
      model.poses[i].xi[d] = save + h;
      const double hi = loss_at();
      model.poses[i].xi[d] = save - h;
      const double lo = loss_at();
      model.poses[i].xi[d] = save;
      const double fd = (hi - lo) / (2 * h);
      const double scale = std::max({1.0, std::abs(fd)});
      CHECK(std::abs(snap.pose[i][d] - fd) / scale < 1e-4);
    }

  // A spread of head weights.
  for (size_t i = 0; i < model.heads.geo.param_count(); i += 37) {
    double* p = model.heads.geo.params() + i;
    const double save = *p;
    *p = save + h;
    const double hi = loss_at();
    *p = save - h;
    const double lo = loss_at();
    *p = save;
    const double fd = (hi - lo) / (2 * h);
    CHECK(std::abs(snap.geo[i] - fd) / std::max(1.0, std::abs(fd)) < 1e-4);
  }

  // Touched grid features on tile 0's grid.
  const int tile = trainer.pick_tile(0);
  int checked = 0;
  for (size_t i = 0; i < model.grids[tile].params.size() && checked < 25; ++i) {
    if (snap.grid[tile][i] == 0.0) continue;
    double& p = model.grids[tile].params[i];
    const double save = p;
    p = save + h;
    const double hi = loss_at();
    p = save - h;
    const double lo = loss_at();
    p = save;
    const double fd = (hi - lo) / (2 * h);
    CHECK(std::abs(snap.grid[tile][i] - fd) / std::max(1.0, std::abs(fd)) < 1e-4);
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("evaluate is repeatable and zero iterations change nothing") {
  const SessionSet set = tiny_set();
  FusionModel<float> model = build_model<float>(set, tiny_setup());
  const auto params_before = model.grids[0].params;
  const auto geo_before = model.heads.geo.param_vector();

  Trainer<float> trainer(model);
  const LossReport a = trainer.evaluate(3);
  const LossReport b = trainer.evaluate(3);
  CHECK(a.total == b.total);
  CHECK(a.n_surf == b.n_surf);

  std::vector<LossReport> history;
  trainer.run(0, &history);
  CHECK(history.empty());
  CHECK(model.grids[0].params == params_before);
  CHECK(model.heads.geo.param_vector() == geo_before);
}

TEST_CASE("freeze flags hold their targets still") {
  const SessionSet set = tiny_set();

  SUBCASE("frozen poses stay bit-identical") {
    TrainSetup setup = tiny_setup();
    setup.freeze_poses = true;
    FusionModel<float> model = build_model<float>(set, setup);
    std::vector<Vec6> before;
    for (const auto& p : model.poses) before.push_back(p.xi);
    Trainer<float> trainer(model);
    trainer.run(20, nullptr);
    for (size_t i = 0; i < before.size(); ++i)
      CHECK((model.poses[i].xi - before[i]).norm() == 0.0);
  }

  SUBCASE("frozen field keeps heads and grids; poses may move") {
    TrainSetup setup = tiny_setup();
    setup.freeze_field = true;
    setup.gauge_fix = false;
    FusionModel<float> model = build_model<float>(set, setup);
    const auto geo = model.heads.geo.param_vector();
    const auto grid = model.grids[0].params;
    Trainer<float> trainer(model);
    trainer.run(20, nullptr);
    CHECK(model.heads.geo.param_vector() == geo);
    CHECK(model.grids[0].params == grid);
    double moved = 0;
    for (const auto& p : model.poses) moved += p.xi.norm();
    CHECK(moved > 0.0);
  }

  SUBCASE("both frozen: everything unchanged after 100 iterations") {
    TrainSetup setup = tiny_setup();
    setup.freeze_field = true;
    setup.freeze_poses = true;
    FusionModel<float> model = build_model<float>(set, setup);
    const auto geo = model.heads.geo.param_vector();
    const auto sem = model.heads.sem.param_vector();
    const auto grid = model.grids[0].params;
    std::vector<Vec6> xi;
    for (const auto& p : model.poses) xi.push_back(p.xi);
    Trainer<float> trainer(model);
    trainer.run(100, nullptr);
    CHECK(model.heads.geo.param_vector() == geo);
    CHECK(model.heads.sem.param_vector() == sem);
    CHECK(model.grids[0].params == grid);
    for (size_t i = 0; i < xi.size(); ++i)
      CHECK((model.poses[i].xi - xi[i]).norm() == 0.0);
  }
}

TEST_CASE("gauge fix pins the first pose") {
  const SessionSet set = tiny_set();
  TrainSetup setup = tiny_setup();
  setup.gauge_fix = true;
  FusionModel<float> model = build_model<float>(set, setup);
  Trainer<float> trainer(model);
  trainer.run(30, nullptr);
  CHECK(model.poses[0].xi.norm() == 0.0);
}

TEST_CASE("training runs are deterministic") {
  const SessionSet set = tiny_set();
  auto run_once = [&]() {
    FusionModel<float> model = build_model<float>(set, tiny_setup());
    Trainer<float> trainer(model);
    std::vector<LossReport> history;
    trainer.run(25, &history);
    return std::make_pair(history, model.heads.geo.param_vector());
  };
  const auto [h1, p1] = run_once();
  const auto [h2, p2] = run_once();
  REQUIRE(h1.size() == h2.size());
  for (size_t i = 0; i < h1.size(); ++i) {
    CHECK(h1[i].total == h2[i].total);
    CHECK(h1[i].tile == h2[i].tile);
  }
  CHECK(p1 == p2);
}
