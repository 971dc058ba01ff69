#include "rawdeg/noise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "rawdeg/error.hpp"

namespace rawdeg {

void NoiseProfile::validate() const {
  if (!(lambda_read >= 0.0) || !std::isfinite(lambda_read)) {
    throw ValidationError("noise profile '" + label + "': lambda_read must be finite and >= 0");
  }
  if (!(lambda_shot >= 0.0) || !std::isfinite(lambda_shot)) {
    throw ValidationError("noise profile '" + label + "': lambda_shot must be finite and >= 0");
  }
}

void ProfileRegistry::validate() const {
  if (profiles.empty()) {
    throw ValidationError("noise profile registry is empty");
  }
  for (const auto& p : profiles) {
    p.validate();
  }
  for (const auto* r : {&shot_range, &read_range}) {
    if (*r && !((*r)->lo > 0.0 && (*r)->lo < (*r)->hi && std::isfinite((*r)->hi))) {
      throw ValidationError("noise sampling range needs finite bounds 0 < lo < hi");
    }
  }
  if (shot_range.has_value() != read_range.has_value()) {
    throw ValidationError("noise sampling ranges must be given for both lambda_shot and lambda_read");
  }
  if (!(stored_probability >= 0.0 && stored_probability <= 1.0)) {
    throw ValidationError("stored_probability must lie in [0, 1]");
  }
}

ProfileRegistry ProfileRegistry::defaults() {
  ProfileRegistry r;
  r.profiles = {
      {1.0e-6, 1.0e-4, "smartphone-class-default-1"}, {4.0e-6, 2.5e-4, "smartphone-class-default-2"},
      {1.0e-5, 6.0e-4, "smartphone-class-default-3"}, {2.5e-5, 1.5e-3, "smartphone-class-default-4"},
      {5.0e-5, 4.0e-3, "smartphone-class-default-5"}, {1.0e-4, 1.0e-2, "smartphone-class-default-6"},
  };
  r.shot_range = LogRange{1e-4, 1e-2};
  r.read_range = LogRange{1e-6, 1e-4};
  r.stored_probability = 0.5;
  return r;
}

ProfileRegistry ProfileRegistry::clean_only() {
  ProfileRegistry r;
  r.profiles = {NoiseProfile::clean()};
  r.stored_probability = 1.0;
  return r;
}

RawImage add_shot_read_noise(const RawImage& raw, const NoiseProfile& profile, Rng& rng) {
  return add_shot_read_noise_seeded(raw, profile, rng.next());
}

RawImage add_shot_read_noise_seeded(const RawImage& raw, const NoiseProfile& profile, std::uint64_t field_seed) {
  profile.validate();
  if (profile.is_clean()) {
    return raw;
  }
  RawImage out = raw;
  const double read = profile.lambda_read;
  const double shot = profile.lambda_shot;
  for (int c = 0; c < RawImage::kChannels; ++c) {
    const std::uint64_t plane_seed = stable_mix(field_seed, static_cast<std::uint64_t>(c));
    auto v = out[c].values();
    const auto n = static_cast<std::int64_t>(v.size());
    const std::int64_t pairs = (n + 1) / 2;
#pragma omp parallel for schedule(static)
    for (std::int64_t p = 0; p < pairs; ++p) {
      const NormalPair z = counter_normal_pair(plane_seed, static_cast<std::uint64_t>(p));
      const std::int64_t k = 2 * p;
      const double x0 = v[k];
      v[k] = static_cast<float>(x0 + std::sqrt(std::max(0.0, read + shot * x0)) * z.first);
      if (k + 1 < n) {
        const double x1 = v[k + 1];
        v[k + 1] = static_cast<float>(x1 + std::sqrt(std::max(0.0, read + shot * x1)) * z.second);
      }
    }
  }
  return out;
}

NoiseProfile sample_profile(const ProfileRegistry& registry, Rng& rng) {
  const bool use_stored = !registry.has_ranges() || rng.bernoulli(registry.stored_probability);
  if (use_stored) {
    const int idx = rng.uniform_int(0, static_cast<int>(registry.profiles.size()) - 1);
    return registry.profiles[idx];
  }
  NoiseProfile p;
  p.lambda_shot = rng.log_uniform(registry.shot_range->lo, registry.shot_range->hi);
  p.lambda_read = rng.log_uniform(registry.read_range->lo, registry.read_range->hi);
  p.label = "log-uniform";
  return p;
}

MeanVariance patch_statistics(std::span<const float> samples) {
  if (samples.size() < 2) {
    throw ValidationError("a flat patch needs at least 2 samples");
  }
  double mean = 0.0;
  for (float s : samples) {
    mean += s;
  }
  mean /= static_cast<double>(samples.size());
  double ss = 0.0;
  for (float s : samples) {
    const double d = s - mean;
    ss += d * d;
  }
  return {mean, ss / static_cast<double>(samples.size() - 1)};
}

ProfileFit estimate_profile(std::span<const MeanVariance> points, std::span<const double> weights) {
  if (!weights.empty() && weights.size() != points.size()) {
    throw ParameterError("estimate_profile: weight count differs from point count");
  }
  std::set<double> levels;
  for (const auto& p : points) {
    if (!(p.variance >= 0.0) || !std::isfinite(p.mean)) {
      throw ValidationError("estimate_profile: variances must be >= 0 and means finite");
    }
    levels.insert(p.mean);
  }
  if (points.size() >= 3 && levels.size() == 1) {
    throw ValidationError("estimate_profile: all calibration points share one intensity (rank-deficient fit)");
  }
  if (levels.size() < 3) {
    throw ValidationError("estimate_profile: need at least 3 distinct intensity levels, got " +
                          std::to_string(levels.size()));
  }

  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    sw += w;
    sx += w * points[i].mean;
    sy += w * points[i].variance;
  }
  const double mx = sx / sw;
  const double my = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    const double dx = points[i].mean - mx;
    sxx += w * dx * dx;
    sxy += w * dx * (points[i].variance - my);
  }
  if (!(sxx > 0.0)) {
    throw ValidationError("estimate_profile: intensities have no spread (rank-deficient fit)");
  }

  ProfileFit fit;
  double slope = sxy / sxx;
  double intercept = my - slope * mx;
  if (slope < 0.0) {
    fit.shot_clamped = true;
    fit.diagnostics.push_back("fitted lambda_shot " + std::to_string(slope) + " < 0, clamped to 0");
    slope = 0.0;
    intercept = my;
  }
  if (intercept < 0.0) {
    fit.read_clamped = true;
    fit.diagnostics.push_back("fitted lambda_read " + std::to_string(intercept) + " < 0, clamped to 0");
    intercept = 0.0;
  }
  fit.profile.lambda_read = intercept;
  fit.profile.lambda_shot = slope;
  fit.profile.label = "estimated";
  if (std::all_of(points.begin(), points.end(), [](const MeanVariance& p) { return p.variance == 0.0; })) {
    fit.clean_data = true;
    fit.diagnostics.push_back("all calibration variances are zero: data looks noiseless");
  }
  return fit;
}

ProfileFit estimate_profile_from_patches(std::span<const std::vector<float>> patches) {
  std::vector<MeanVariance> points;
  points.reserve(patches.size());
  for (const auto& patch : patches) {
    points.push_back(patch_statistics(patch));
  }
  return estimate_profile(points);
}

ProfileRegistry parse_registry(std::istream& in, const std::string& source) {
  ProfileRegistry registry;
  registry.stored_probability = 1.0;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    std::istringstream fields(line);
    NoiseProfile p;
    if (!(fields >> p.label)) {
      continue;
    }
    std::string extra;
    if (!(fields >> p.lambda_read >> p.lambda_shot) || (fields >> extra)) {
      throw FormatError(source + ":" + std::to_string(line_no) +
                        ": expected '<label> <lambda_read> <lambda_shot>'");
    }
    try {
      p.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
    registry.profiles.push_back(std::move(p));
  }
  if (registry.profiles.empty()) {
    throw ValidationError(source + ": registry contains no profiles");
  }
  return registry;
}

ProfileRegistry read_registry(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open noise registry " + path.string());
  }
  return parse_registry(in, path.string());
}

std::string format_registry_line(const NoiseProfile& profile) {
  std::ostringstream out;
  out << std::setprecision(17) << profile.label << ' ' << profile.lambda_read << ' ' << profile.lambda_shot;
  return out.str();
}

}  // namespace rawdeg
