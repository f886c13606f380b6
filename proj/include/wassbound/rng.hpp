#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace wassbound {

/// Derives an independent stream seed from (seed, stream) via splitmix64.
/// Used for replication-parallel Monte Carlo: replication i runs on
/// Rng(mix_seed(seed, i)) so results do not depend on thread scheduling.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic random stream. std::mt19937_64 is fully specified by the
/// standard, so identical seeds give bit-identical streams on every
/// platform. All variate transforms are implemented here rather than with
/// std::*_distribution, whose algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform on (0, 1]; never returns 0 so log(u) is always finite.
  double uniform() { return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53; }

  /// Standard normal via the Marsaglia polar method. The spare variate is
  /// cached in the stream state, so output stays a pure function of
  /// (seed, call sequence).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double v1, v2, s;
    do {
      v1 = 2.0 * uniform() - 1.0;
      v2 = 2.0 * uniform() - 1.0;
      s = v1 * v1 + v2 * v2;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v2 * f;
    has_spare_ = true;
    return v1 * f;
  }

  /// Exponential with unit rate.
  double exponential() { return -std::log(uniform()); }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace wassbound
