#pragma once

#include <cmath>
#include <cstdint>

#include "ptpb/types.hpp"

namespace ptpb {

/// Deterministic 64-bit PRNG (SplitMix64). Chosen over std::mt19937 so that
/// streams are bit-identical across standard libraries and platforms, which the
/// reproducibility guarantees rely on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random mantissa bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller. Always consumes exactly two uniforms per
  /// call (the sine branch is discarded) so replay does not depend on call parity.
  double gaussian(double mean = 0.0, double stddev = 1.0) {
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 < 1e-300) u1 = 1e-300;
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * kPi * u2);
  }

  /// Vector of independent uniforms, one per component of [lo, hi).
  Vec uniform_vec(const Vec& lo, const Vec& hi) {
    Vec out(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) out[i] = uniform(lo[i], hi[i]);
    return out;
  }

  /// Vector of independent zero-mean gaussians with a common standard deviation.
  Vec gaussian_vec(Eigen::Index n, double stddev) {
    Vec out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = gaussian(0.0, stddev);
    return out;
  }

 private:
  std::uint64_t state_;
};

/// Derives an independent child seed from (seed, stream). Used to give every
/// Monte Carlo sample / sweep cell its own stream so results do not depend on
/// evaluation order or thread scheduling.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  Rng r(seed ^ (0xD1B54A32D192ED03ull * (stream + 1)));
  return r.next_u64();
}

}  // namespace ptpb
