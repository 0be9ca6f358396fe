#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "mapfuse/types.hpp"

namespace mapfuse {

/// Combines seed material into a stream seed (splitmix64 finalizer).
inline uint64_t mix_seed(uint64_t a, uint64_t b = 0, uint64_t c = 0) {
  uint64_t x = a * 0x9e3779b97f4a7c15ull + b * 0xbf58476d1ce4e5b9ull +
               c * 0x94d049bb133111ebull + 0x2545f4914f6cdd1dull;
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

/// Deterministic RNG. Uniform/normal transforms are hand-rolled so results
/// do not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t bits() { return gen_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  uint64_t index(uint64_t n) {
    return static_cast<uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  /// Standard normal via Box-Muller (one value per call, no cached spare).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  Vec3 normal3(double sigma) {
    return Vec3(normal() * sigma, normal() * sigma, normal() * sigma);
  }

  Vec3 uniform_in(const Aabb& box) {
    return Vec3(uniform(box.min.x(), box.max.x()),
                uniform(box.min.y(), box.max.y()),
                uniform(box.min.z(), box.max.z()));
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace mapfuse
