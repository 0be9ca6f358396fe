#pragma once

#include <string>
#include <vector>

#include "mapfuse/baseline.hpp"
#include "mapfuse/extract.hpp"
#include "mapfuse/trainer.hpp"

namespace mapfuse {

struct EvalConfig {
  double threshold_m = 0.2;
  size_t samples = 100'000;
};

/// One declarative description of a whole run; every command derives its
/// parameters from here and stamps reports with the config hash.
struct RunConfig {
  uint64_t seed = 1;
  std::vector<std::string> sessions;  // manifest paths
  std::string output_dir = "out";
  TrainSetup train;
  ExtractConfig extract;
  BaselineConfig baseline;
  EvalConfig eval;
};

/// JSON round-trip. Loading rejects unknown keys, naming the full key path;
/// missing keys keep their defaults. The baseline inherits seed and odometry
/// weights from the top level unless its section overrides them.
std::string config_to_json(const RunConfig& cfg);
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::string& path);
void save_config(const std::string& path, const RunConfig& cfg);

/// FNV-1a over the canonical serialization.
uint64_t config_hash(const RunConfig& cfg);

}  // namespace mapfuse
