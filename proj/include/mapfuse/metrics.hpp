#pragma once

#include <map>
#include <vector>

#include "mapfuse/mesh.hpp"
#include "mapfuse/ply_io.hpp"
#include "mapfuse/se3.hpp"

namespace mapfuse {

struct LabeledPoints {
  std::vector<Vec3> points;
  std::vector<uint8_t> labels;
};

/// Area-weighted surface samples carrying their face labels.
LabeledPoints sample_labeled_points(const TriangleMesh& mesh, size_t n,
                                    Rng& rng);

/// Reference geometry for comparison: meshes are sampled (n area-weighted
/// points), pure point clouds are used as-is with their labels.
LabeledPoints reference_points(const PlyData& ply, size_t n, uint64_t seed);

struct ReconScores {
  double accuracy = 0.0;      // fraction of predicted points near reference
  double completeness = 0.0;  // fraction of reference points near prediction
  double fscore = 0.0;
  double semantic_fscore = 0.0;     // mean per-class F over classes in ref
  std::vector<double> class_fscore;  // -1 marks classes absent from ref
  double threshold = 0.0;
  size_t pred_count = 0, ref_count = 0;
};

/// Distance-threshold precision/recall/F plus label-aware per-class scores.
/// class_count 0 infers the table from the labels seen.
ReconScores recon_scores(const LabeledPoints& pred, const LabeledPoints& ref,
                         double threshold, int class_count = 0);

struct PoseScores {
  double translation_rmse = 0.0;  // meters, after rigid trajectory alignment
  double rotation_rmse_deg = 0.0;
  size_t count = 0;
};

/// Aligns estimated to reference positions with a no-scale Umeyama fit, then
/// reports post-alignment RMSEs. Throws when ids are missing from `est` or
/// fewer than 3 poses are shared.
PoseScores pose_scores(const std::map<int, RigidTransform>& est,
                       const std::map<int, RigidTransform>& ref);

}  // namespace mapfuse
