#pragma once

#include <cstdint>
#include <optional>
#include <random>

namespace rawdeg {

/// splitmix64 finalizer applied to `seed + (index + 1) * 0x9E3779B97F4A7C15`.
///
/// This is the fixed derivation used for per-image seeds, substreams and the
/// counter-based noise field. Changing it invalidates every stored record.
std::uint64_t stable_mix(std::uint64_t seed, std::uint64_t index) noexcept;

/// Maps 64 random bits to a double in [0, 1) with 53 bits of resolution.
double unit_interval(std::uint64_t bits) noexcept;

/// Seeded random source passed explicitly to every stochastic operation.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. Distributions are implemented here rather than taken from
/// <random>, whose distribution algorithms vary between standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return unit_interval(engine_()); }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi], unbiased (rejection sampling).
  int uniform_int(int lo, int hi);

  /// exp(Uniform[log lo, log hi)); lo and hi must be positive.
  double log_uniform(double lo, double hi);

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller; the second variate of each pair is
  /// cached for the next call.
  double normal();

private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// Standard normal pair derived purely from (seed, pair index). Used for the
/// noise field so any partition of the work gives identical samples.
struct NormalPair {
  double first;
  double second;
};
NormalPair counter_normal_pair(std::uint64_t seed, std::uint64_t pair_index) noexcept;

}  // namespace rawdeg
