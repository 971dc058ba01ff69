#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rawdeg/raw_image.hpp"
#include "rawdeg/rng.hpp"

namespace rawdeg {

/// Shot-read noise parameters in normalized-intensity units:
/// variance(x) = lambda_read + lambda_shot * x.
struct NoiseProfile {
  double lambda_read = 0.0;
  double lambda_shot = 0.0;
  std::string label = "clean";

  bool is_clean() const { return lambda_read == 0.0 && lambda_shot == 0.0; }
  double variance_at(double x) const { return std::max(0.0, lambda_read + lambda_shot * x); }
  void validate() const;

  static NoiseProfile clean() { return {}; }
  bool operator==(const NoiseProfile&) const = default;
};

struct LogRange {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const LogRange&) const = default;
};

/// Stored noise profiles plus optional log-uniform ranges for synthetic draws.
struct ProfileRegistry {
  std::vector<NoiseProfile> profiles;
  std::optional<LogRange> shot_range;
  std::optional<LogRange> read_range;
  /// Chance of picking a stored profile when ranges are configured.
  double stored_probability = 0.5;

  void validate() const;
  bool has_ranges() const { return shot_range.has_value() && read_range.has_value(); }

  /// Six smartphone-class placeholder profiles plus SIDD-like ranges.
  static ProfileRegistry defaults();
  static ProfileRegistry clean_only();
};

/// Replaces every sample x with a draw from N(x, lambda_read + lambda_shot * x).
/// No clipping. Draws a field seed from `rng`; see add_shot_read_noise_seeded.
RawImage add_shot_read_noise(const RawImage& raw, const NoiseProfile& profile, Rng& rng);

/// Same as above with an explicit field seed. Sample k of plane c uses the
/// counter-based normal pair (stable_mix(seed, c), k / 2), so the output is
/// independent of how the work is split across threads.
RawImage add_shot_read_noise_seeded(const RawImage& raw, const NoiseProfile& profile, std::uint64_t field_seed);

NoiseProfile sample_profile(const ProfileRegistry& registry, Rng& rng);

/// One calibration point: sample mean and variance of a flat region.
struct MeanVariance {
  double mean = 0.0;
  double variance = 0.0;
};

MeanVariance patch_statistics(std::span<const float> samples);

struct ProfileFit {
  NoiseProfile profile;
  bool read_clamped = false;
  bool shot_clamped = false;
  bool clean_data = false;
  std::vector<std::string> diagnostics;
};

/// Least-squares fit of variance = lambda_read + lambda_shot * mean.
/// Optional per-point weights (e.g. sample counts). Needs >= 3 distinct means.
ProfileFit estimate_profile(std::span<const MeanVariance> points, std::span<const double> weights = {});

/// Per-patch sample statistics followed by the fit above.
ProfileFit estimate_profile_from_patches(std::span<const std::vector<float>> patches);

/// Registry text format: `<label> <lambda_read> <lambda_shot>` per line, `#` comments.
ProfileRegistry parse_registry(std::istream& in, const std::string& source);
ProfileRegistry read_registry(const std::filesystem::path& path);
std::string format_registry_line(const NoiseProfile& profile);

}  // namespace rawdeg
