#pragma once

#include <string>
#include <vector>

#include "mapfuse/trainer.hpp"

namespace mapfuse {

/// A trained model restored from disk. The archive stores submap AABBs and
/// poses but not meshes, which is all extraction and point queries need;
/// `storage` owns the skeleton submaps the model points at.
struct ModelArchive {
  std::vector<Submap> storage;
  FusionModel<float> model;
  uint64_t config_hash = 0;
  std::vector<std::string> class_names;

  // model.submaps points into storage; moves keep that valid, copies would not
  ModelArchive() = default;
  ModelArchive(const ModelArchive&) = delete;
  ModelArchive& operator=(const ModelArchive&) = delete;
  ModelArchive(ModelArchive&&) = default;
  ModelArchive& operator=(ModelArchive&&) = default;
};

/// Binary single-file dump of grids, heads, poses, tiling, and submap
/// bounds (host little-endian).
void save_model(const std::string& path, const FusionModel<float>& model,
                uint64_t config_hash,
                const std::vector<std::string>& class_names);

ModelArchive load_model(const std::string& path);

}  // namespace mapfuse
