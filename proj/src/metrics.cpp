#include "mapfuse/metrics.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mapfuse/kdtree.hpp"

namespace mapfuse {

LabeledPoints sample_labeled_points(const TriangleMesh& mesh, size_t n,
                                    Rng& rng) {
  LabeledPoints out;
  out.points.reserve(n);
  out.labels.reserve(n);
  for (const SurfaceSample& s : sample_surface(mesh, n, rng)) {
    out.points.push_back(s.point);
    out.labels.push_back(s.label);
  }
  return out;
}

LabeledPoints reference_points(const PlyData& ply, size_t n, uint64_t seed) {
  if (!ply.mesh.faces.empty()) {
    Rng rng(mix_seed(seed, 0x9e7c, 0));
    return sample_labeled_points(ply.mesh, n, rng);
  }
  LabeledPoints out;
  out.points = ply.mesh.vertices;
  out.labels = ply.vertex_labels;
  if (out.labels.empty()) out.labels.assign(out.points.size(), 0);
  return out;
}

namespace {

/// Fraction of `from` points whose nearest `to` point is within `th`.
double coverage(const std::vector<Vec3>& from, const KdTree& to, double th) {
  if (from.empty()) return 0.0;
  size_t hit = 0;
  for (const Vec3& p : from)
    if (to.nearest_dist(p) <= th) ++hit;
  return double(hit) / double(from.size());
}

double fscore_of(double p, double r) {
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

}  // namespace

ReconScores recon_scores(const LabeledPoints& pred, const LabeledPoints& ref,
                         double threshold, int class_count) {
  if (pred.points.empty() || ref.points.empty())
    throw std::invalid_argument("recon_scores: empty point set");
  ReconScores s;
  s.threshold = threshold;
  s.pred_count = pred.points.size();
  s.ref_count = ref.points.size();

  KdTree pred_tree(pred.points);
  KdTree ref_tree(ref.points);
  s.accuracy = coverage(pred.points, ref_tree, threshold);
  s.completeness = coverage(ref.points, pred_tree, threshold);
  s.fscore = fscore_of(s.accuracy, s.completeness);

  int classes = class_count;
  if (classes == 0) {
    uint8_t mx = 0;
    for (uint8_t l : pred.labels) mx = std::max(mx, l);
    for (uint8_t l : ref.labels) mx = std::max(mx, l);
    classes = int(mx) + 1;
  }
  s.class_fscore.assign(classes, -1.0);

  std::vector<std::vector<Vec3>> pred_by(classes), ref_by(classes);
  for (size_t i = 0; i < pred.points.size(); ++i) {
    const int l = pred.labels[i];
    if (l < classes) pred_by[l].push_back(pred.points[i]);
  }
  for (size_t i = 0; i < ref.points.size(); ++i) {
    const int l = ref.labels[i];
    if (l < classes) ref_by[l].push_back(ref.points[i]);
  }

  double sum = 0.0;
  int present = 0;
  for (int k = 0; k < classes; ++k) {
    if (ref_by[k].empty()) continue;  // class absent from the reference
    ++present;
    double pk = 0.0, rk = 0.0;
    const KdTree ref_k(ref_by[k]);
    if (!pred_by[k].empty()) {
      const KdTree pred_k(pred_by[k]);
      pk = coverage(pred_by[k], ref_k, threshold);
      rk = coverage(ref_by[k], pred_k, threshold);
    }
    s.class_fscore[k] = fscore_of(pk, rk);
    sum += s.class_fscore[k];
  }
  s.semantic_fscore = present > 0 ? sum / present : 0.0;
  return s;
}

PoseScores pose_scores(const std::map<int, RigidTransform>& est,
                       const std::map<int, RigidTransform>& ref) {
  std::vector<const RigidTransform*> e, r;
  for (const auto& [id, pose] : ref) {
    const auto it = est.find(id);
    if (it == est.end())
      throw std::runtime_error("pose_scores: estimate missing submap " +
                               std::to_string(id));
    e.push_back(&it->second);
    r.push_back(&pose);
  }
  const size_t n = r.size();
  if (n < 3)
    throw std::runtime_error("pose_scores: need at least 3 shared poses, got " +
                             std::to_string(n));

  Eigen::Matrix3Xd src(3, n), dst(3, n);
  for (size_t i = 0; i < n; ++i) {
    src.col(i) = e[i]->t;
    dst.col(i) = r[i]->t;
  }
  const Mat4 A = Eigen::umeyama(src, dst, false);
  const Mat3 Ru = A.block<3, 3>(0, 0);
  const Vec3 tu = A.block<3, 1>(0, 3);

  PoseScores s;
  s.count = n;
  double terr = 0.0, rerr = 0.0;
  for (size_t i = 0; i < n; ++i) {
    terr += (Ru * e[i]->t + tu - r[i]->t).squaredNorm();
    const Mat3 dR = r[i]->R.transpose() * Ru * e[i]->R;
    const double c = std::clamp(0.5 * (dR.trace() - 1.0), -1.0, 1.0);
    const double ang = std::acos(c);
    rerr += ang * ang;
  }
  s.translation_rmse = std::sqrt(terr / double(n));
  s.rotation_rmse_deg = std::sqrt(rerr / double(n)) * 180.0 / M_PI;
  return s;
}

}  // namespace mapfuse
