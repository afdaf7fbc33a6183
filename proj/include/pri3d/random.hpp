#pragma once

#include <cstdint>
#include <cmath>
#include <random>

namespace pri3d {

/// Seed mixer used to derive independent streams (per step, per item) from
/// a single user seed.
constexpr std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t MixSeeds(std::uint64_t a, std::uint64_t b) {
  return SplitMix64(a ^ SplitMix64(b + 0x632BE59BD9B4E019ull));
}

/// mt19937_64 with portable draws. The standard distributions are
/// implementation-defined, so sampling goes through these helpers to keep
/// outputs identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(SplitMix64(seed)) {}

  std::uint64_t Next() { return engine_(); }

  /// Uniform integer in [0, n); n must be > 0.
  std::uint64_t UniformBelow(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  double Normal() {
    double u1 = Uniform();
    while (u1 <= 0.0) u1 = Uniform();
    const double u2 = Uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pri3d
