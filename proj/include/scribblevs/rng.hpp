#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace scribblevs {

/// Mixes a base seed with a stream index into an independent child seed.
inline uint64_t derive_seed(uint64_t base, uint64_t stream) {
  uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic random source. Draws are defined purely in terms of the
/// mt19937_64 bit stream, so sequences are reproducible across standard
/// library implementations.
struct Rng {
  std::mt19937_64 engine;

  explicit Rng(uint64_t seed) : engine(seed) {}

  uint64_t next_u64() { return engine(); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(engine() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi] via rejection-free scaling (bias is below
  /// 2^-40 for any range that fits the use sites here).
  int64_t uniform_int(int64_t lo, int64_t hi) {
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int64_t>(engine() % span);
  }

  /// Standard normal via Box-Muller (two uniforms per draw, second discarded).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  Rng fork(uint64_t stream) { return Rng(derive_seed(engine(), stream)); }
};

}  // namespace scribblevs
