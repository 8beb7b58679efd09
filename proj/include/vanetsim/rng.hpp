#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace vanetsim {

/// Deterministic RNG with explicitly implemented distributions.
///
/// std::mt19937_64 output is pinned by the standard but the standard
/// distributions are not, so every draw here is derived from raw engine
/// words. Identical seeds give identical draw sequences on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed), seed_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform double in [0, 1), 53 bits of entropy.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Inclusive integer range via rejection sampling (unbiased).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(eng_());  // full 64-bit range
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Box-Muller without spare caching: two engine words per draw, so the
  /// draw sequence depends only on call order.
  double normal(double mean, double sigma) {
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sigma * r * std::cos(2.0 * M_PI * u2);
  }

  /// Derive an independent substream from the construction seed; mixing is
  /// splitmix64 so nearby stream ids do not correlate. Independent of how
  /// many draws were taken from this instance.
  Rng fork(std::uint64_t stream) const {
    std::uint64_t z = seed_ ^ (stream + 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return Rng(z ^ (z >> 31));
  }

 private:
  std::mt19937_64 eng_;
  std::uint64_t seed_;
};

}  // namespace vanetsim
