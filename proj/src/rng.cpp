#include "rawdeg/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "rawdeg/error.hpp"

namespace rawdeg {

namespace {

constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix_finalize(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Uniform in (0, 1], safe for log().
double open_low_unit(std::uint64_t bits) noexcept {
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

}  // namespace

std::uint64_t stable_mix(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix_finalize(seed + (index + 1) * kGoldenGamma);
}

double unit_interval(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

int Rng::uniform_int(int lo, int hi) {
  if (hi < lo) {
    throw ParameterError("uniform_int: empty range");
  }
  const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % span;
  std::uint64_t draw = engine_();
  while (draw >= limit) {
    draw = engine_();
  }
  return lo + static_cast<int>(draw % span);
}

double Rng::log_uniform(double lo, double hi) {
  if (!(lo > 0.0) || !(hi > 0.0)) {
    throw ParameterError("log_uniform: bounds must be positive");
  }
  return std::exp(uniform(std::log(lo), std::log(hi)));
}

double Rng::normal() {
  if (spare_) {
    const double z = *spare_;
    spare_.reset();
    return z;
  }
  const double radius = std::sqrt(-2.0 * std::log(open_low_unit(engine_())));
  const double angle = 2.0 * std::numbers::pi * uniform();
  spare_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

NormalPair counter_normal_pair(std::uint64_t seed, std::uint64_t pair_index) noexcept {
  const double u1 = open_low_unit(stable_mix(seed, 2 * pair_index));
  const double u2 = unit_interval(stable_mix(seed, 2 * pair_index + 1));
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace rawdeg
