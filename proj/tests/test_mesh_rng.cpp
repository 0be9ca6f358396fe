#include <cmath>
#include <set>

#include "doctest.h"
#include "mapfuse/mesh.hpp"
#include "mapfuse/rng.hpp"

using namespace mapfuse;

namespace {

TriangleMesh two_triangle_square() {
  TriangleMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  m.faces = {{0, 1, 2}, {0, 2, 3}};
  m.face_labels = {3, 3};
  return m;
}

}  // namespace

TEST_CASE("rng determinism and statistics") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.bits() == b.bits());

  CHECK(mix_seed(1, 2, 3) != mix_seed(1, 2, 4));
  CHECK(mix_seed(1, 2, 3) != mix_seed(1, 3, 3));
  CHECK(mix_seed(1, 2, 3) == mix_seed(1, 2, 3));

  Rng rng(7);
  double sum = 0, sum2 = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sum2 += u * u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(sum2 / n == doctest::Approx(1.0 / 3).epsilon(0.02));

  double nm = 0, nv = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    nm += x;
    nv += x * x;
  }
  CHECK(nm / n == doctest::Approx(0.0).epsilon(0.02));
  CHECK(nv / n == doctest::Approx(1.0).epsilon(0.03));

  std::set<uint64_t> seen;
  for (uint64_t i = 0; i < 10; ++i) seen.insert(rng.index(10));
  CHECK(seen.size() > 1);
  for (int i = 0; i < 1000; ++i) CHECK(rng.index(7) < 7);
}

TEST_CASE("face geometry") {
  const TriangleMesh m = two_triangle_square();
  CHECK(face_area(m, 0) == doctest::Approx(0.5));
  CHECK(mesh_area(m) == doctest::Approx(1.0));
  CHECK((face_normal(m, 0) - Vec3(0, 0, 1)).norm() < 1e-15);

  const Aabb box = mesh_aabb(m);
  CHECK((box.min - Vec3(0, 0, 0)).norm() == 0.0);
  CHECK((box.max - Vec3(1, 1, 0)).norm() == 0.0);
}

TEST_CASE("surface sampling is area weighted") {
  // Unit square in z=0: samples sit on the plane with the face label.
  const TriangleMesh sq = two_triangle_square();
  Rng rng(5);
  auto samples = sample_surface(sq, 1000, rng);
  REQUIRE(samples.size() == 1000);
  for (const auto& s : samples) {
    CHECK(s.point.z() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(std::abs(s.normal.z()) - 1.0) < 1e-12);
    CHECK(s.label == 3);
    CHECK(s.point.x() >= -1e-12);
    CHECK(s.point.x() <= 1 + 1e-12);
  }

  // Two triangles of area ratio 3:1 -> 75% of samples from the big one.
  TriangleMesh two;
  two.vertices = {{0, 0, 0}, {3, 0, 0}, {0, 2, 0},  // area 3
                  {10, 0, 0}, {11, 0, 0}, {10, 2, 0}};  // area 1
  two.faces = {{0, 1, 2}, {3, 4, 5}};
  two.face_labels = {0, 1};
  Rng rng2(6);
  auto s2 = sample_surface(two, 100000, rng2);
  int big = 0;
  for (const auto& s : s2) big += (s.label == 0);
  CHECK(double(big) / s2.size() == doctest::Approx(0.75).epsilon(0.014));

  const auto cdf = face_area_cdf(two);
  REQUIRE(cdf.size() == 2);
  CHECK(cdf[0] == doctest::Approx(0.75));
  CHECK(cdf[1] == doctest::Approx(1.0));
}

TEST_CASE("uniform box sampling") {
  Aabb box;
  box.expand(Vec3(0, 0, 0));
  box.expand(Vec3(1, 1, 1));
  Rng rng(8);
  Vec3 mean = Vec3::Zero();
  const int n = 100000;
  for (const Vec3& p : sample_uniform_in_aabb(box, n, rng)) {
    CHECK(box.contains(p));
    mean += p;
  }
  mean /= n;
  for (int a = 0; a < 3; ++a)
    CHECK(mean[a] == doctest::Approx(0.5).epsilon(0.01));

  // Degenerate flat box: z is pinned.
  Aabb flat;
  flat.expand(Vec3(0, 0, 2));
  flat.expand(Vec3(1, 1, 2));
  for (const Vec3& p : sample_uniform_in_aabb(flat, 100, rng))
    CHECK(p.z() == doctest::Approx(2.0));
}

TEST_CASE("mesh validation and transforms") {
  TriangleMesh m = two_triangle_square();
  CHECK_NOTHROW(validate_mesh(m, 4));
  m.face_labels = {3, 4};
  CHECK_THROWS(validate_mesh(m, 4));  // label == class count
  m.face_labels = {3, 3};
  m.faces[1][2] = 9;
  CHECK_THROWS(validate_mesh(m, 4));  // vertex index out of range

  TriangleMesh sq = two_triangle_square();
  const TriangleMesh moved =
      transformed_mesh(sq, Mat3::Identity(), Vec3(0, 0, 5));
  CHECK(moved.vertices[0].z() == doctest::Approx(5.0));
  CHECK(moved.faces == sq.faces);

  TriangleMesh combined = sq;
  append_mesh(combined, moved);
  CHECK(combined.vertex_count() == 8);
  CHECK(combined.face_count() == 4);
  CHECK(combined.faces[2][0] == 4);  // indices shifted by the vertex offset
}
