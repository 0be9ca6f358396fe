#include <cmath>

#include "doctest.h"
#include "mapfuse/metrics.hpp"
#include "mapfuse/rng.hpp"

using namespace mapfuse;

namespace {

TriangleMesh plane_mesh(double size, uint8_t label, double z = 0.0) {
  TriangleMesh m;
  m.vertices = {{0, 0, z}, {size, 0, z}, {size, size, z}, {0, size, z}};
  m.faces = {{0, 1, 2}, {0, 2, 3}};
  m.face_labels = {label, label};
  return m;
}

}  // namespace

TEST_CASE("identical meshes score one") {
  const TriangleMesh m = plane_mesh(10.0, 3);
  Rng ra(51), rb(52);
  const LabeledPoints a = sample_labeled_points(m, 20000, ra);
  const LabeledPoints b = sample_labeled_points(m, 20000, rb);
  const ReconScores s = recon_scores(a, b, 0.2);
  CHECK(s.accuracy == doctest::Approx(1.0).epsilon(0.005));
  CHECK(s.completeness == doctest::Approx(1.0).epsilon(0.005));
  CHECK(s.fscore == doctest::Approx(1.0).epsilon(0.005));
  CHECK(s.semantic_fscore == doctest::Approx(1.0).epsilon(0.005));
  REQUIRE(s.class_fscore.size() == 4);
  CHECK(s.class_fscore[3] == doctest::Approx(1.0).epsilon(0.005));
  // Classes absent from the reference are flagged, not averaged.
  CHECK(s.class_fscore[0] == -1.0);
  CHECK(s.pred_count == 20000);
}

TEST_CASE("separated planes score zero") {
  const TriangleMesh a = plane_mesh(10.0, 0);
  const TriangleMesh b = plane_mesh(10.0, 0, 1.0);  // 1 m above
  Rng ra(53), rb(54);
  const auto pa = sample_labeled_points(a, 5000, ra);
  const auto pb = sample_labeled_points(b, 5000, rb);
  const ReconScores s = recon_scores(pa, pb, 0.2);
  CHECK(s.fscore == 0.0);
  CHECK(s.accuracy == 0.0);
}

TEST_CASE("good geometry with wrong labels") {
  const TriangleMesh a = plane_mesh(10.0, 1);
  const TriangleMesh b = plane_mesh(10.0, 2);
  Rng ra(55), rb(56);
  const ReconScores s = recon_scores(sample_labeled_points(a, 5000, ra),
                                     sample_labeled_points(b, 5000, rb), 0.2);
  CHECK(s.fscore == doctest::Approx(1.0).epsilon(0.005));
  CHECK(s.semantic_fscore == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("fscore is monotone in the distance threshold") {
  // Prediction offset by 0.15 m: larger thresholds can only help.
  const TriangleMesh gt = plane_mesh(8.0, 0);
  TriangleMesh pred = plane_mesh(8.0, 0, 0.15);
  Rng ra(57), rb(58);
  const auto pp = sample_labeled_points(pred, 4000, ra);
  const auto pg = sample_labeled_points(gt, 4000, rb);
  double prev = -1.0;
  for (double d : {0.05, 0.1, 0.14, 0.16, 0.2, 0.5}) {
    const ReconScores s = recon_scores(pp, pg, d);
    CHECK(s.fscore >= prev);
    prev = s.fscore;
  }
  CHECK(recon_scores(pp, pg, 0.05).fscore == 0.0);
  CHECK(recon_scores(pp, pg, 0.5).fscore == doctest::Approx(1.0).epsilon(0.005));
}

TEST_CASE("pose scores") {
  Rng rng(59);
  std::map<int, RigidTransform> gt;
  for (int i = 0; i < 10; ++i) {
    RigidTransform T;
    T.t = Vec3(5.0 * i, rng.uniform(-2.0, 2.0), 0.0);
    T.R = so3_exp(Vec3(0, 0, rng.uniform(-0.3, 0.3)));
    gt[i] = T;
  }

  SUBCASE("identity: exact zeros") {
    const PoseScores s = pose_scores(gt, gt);
    CHECK(s.translation_rmse < 1e-9);
    CHECK(s.rotation_rmse_deg < 1e-4);
    CHECK(s.count == 10);
  }

  SUBCASE("global gauge shift is removed by alignment") {
    RigidTransform G;
    G.R = so3_exp(Vec3(0.2, -0.1, 0.4));
    G.t = Vec3(100, -50, 25);
    std::map<int, RigidTransform> moved;
    for (const auto& [id, T] : gt) moved[id] = G.compose(T);
    const PoseScores s = pose_scores(moved, gt);
    CHECK(s.translation_rmse < 1e-9);
    CHECK(s.rotation_rmse_deg < 1e-4);
  }

  SUBCASE("iid position noise shows up as sqrt(3) sigma") {
    std::map<int, RigidTransform> big;
    Rng noisy(60);
    for (int i = 0; i < 200; ++i) {
      RigidTransform T;
      T.t = Vec3(2.0 * i, 50.0 * std::sin(0.1 * i), 0);
      big[i] = T;
    }
    std::map<int, RigidTransform> est;
    const double sigma = 0.1;
    for (const auto& [id, T] : big) {
      RigidTransform E = T;
      E.t += sigma * noisy.normal3(1.0);
      est[id] = E;
    }
    const PoseScores s = pose_scores(est, big);
    CHECK(s.translation_rmse ==
          doctest::Approx(sigma * std::sqrt(3.0)).epsilon(0.15));
  }

  SUBCASE("missing ids and too-few poses throw") {
    std::map<int, RigidTransform> partial = gt;
    partial.erase(3);
    CHECK_THROWS(pose_scores(partial, gt));

    std::map<int, RigidTransform> two;
    two[0] = gt[0];
    two[1] = gt[1];
    CHECK_THROWS(pose_scores(two, two));
  }
}

TEST_CASE("reference points from clouds keep their labels") {
  PlyData cloud;
  cloud.mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  cloud.vertex_labels = {4, 5, 6};
  const LabeledPoints pts = reference_points(cloud, 100, 1);
  REQUIRE(pts.points.size() == 3);  // used as-is, not resampled
  CHECK(pts.labels == std::vector<uint8_t>{4, 5, 6});

  PlyData mesh;
  mesh.mesh = plane_mesh(4.0, 2);
  const LabeledPoints sampled = reference_points(mesh, 500, 1);
  CHECK(sampled.points.size() == 500);
  for (uint8_t l : sampled.labels) CHECK(l == 2);
}
