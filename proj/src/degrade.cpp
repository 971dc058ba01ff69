#include "rawdeg/degrade.hpp"

#include <cmath>
#include <exception>

#include <omp.h>

#include "rawdeg/error.hpp"

namespace rawdeg {

namespace {

// Substreams of a per-image seed.
enum Stream : std::uint64_t { kPlanStream = 0, kKernelStream = 1, kProfileStream = 2, kFieldStream = 3 };

bool in_unit(double p) { return p >= 0.0 && p <= 1.0; }

struct StageRunner {
  RawImage& image;

  void operator()(const BlurStage& s) const { image = convolve(image, s.kernel); }
  void operator()(const NoiseStage& s) const { image = add_shot_read_noise_seeded(image, s.profile, s.field_seed); }
  void operator()(const ExposureStage& s) const { image = exposure_scale(image, s.gain); }
  void operator()(const QuantizeStage& s) const { image = requantize(image, s.target_bits); }
  void operator()(const ClipStage&) const { clip01_inplace(image); }
};

RawImage run_stages(const RawImage& raw, const std::vector<Stage>& stages) {
  RawImage image = raw;
  for (const Stage& stage : stages) {
    std::visit(StageRunner{image}, stage);
  }
  return image;
}

}  // namespace

void DegradationConfig::validate() const {
  if (level != Level::one && level != Level::two) {
    throw ValidationError("degradation level must be 1 or 2");
  }
  kernel_pool.validate();
  noise_registry.validate();
  if (!in_unit(exposure.probability) || !in_unit(quantization.probability) ||
      !in_unit(noise_before_blur_probability)) {
    throw ValidationError("pipeline probabilities must lie in [0, 1]");
  }
  if (!(exposure.gain_lo > 0.0 && exposure.gain_lo <= exposure.gain_hi && exposure.gain_hi <= 1.0)) {
    throw ValidationError("exposure gain range must satisfy 0 < lo <= hi <= 1");
  }
  if (quantization.max_bits_drop < 0 || quantization.max_bits_drop > 2) {
    throw ValidationError("quantization max_bits_drop must be 0, 1 or 2");
  }
}

DegradationConfig DegradationConfig::defaults(Level level) {
  DegradationConfig cfg;
  cfg.level = level;
  return cfg;
}

std::string_view stage_name(const Stage& stage) {
  struct Namer {
    std::string_view operator()(const BlurStage&) const { return "blur"; }
    std::string_view operator()(const NoiseStage&) const { return "noise"; }
    std::string_view operator()(const ExposureStage&) const { return "exposure"; }
    std::string_view operator()(const QuantizeStage&) const { return "requantize"; }
    std::string_view operator()(const ClipStage&) const { return "clip"; }
  };
  return std::visit(Namer{}, stage);
}

RawImage exposure_scale(const RawImage& raw, double gain) {
  if (!(gain > 0.0 && gain <= 1.0)) {
    throw ParameterError("exposure gain " + std::to_string(gain) + " outside (0, 1]");
  }
  if (gain == 1.0) {
    return raw;
  }
  RawImage out = raw;
  for (auto& plane : out.planes) {
    for (float& v : plane.values()) {
      v = static_cast<float>(gain * v);
    }
  }
  return out;
}

RawImage requantize(const RawImage& raw, int target_bits) {
  if (target_bits < 1 || target_bits > raw.bit_depth) {
    throw ParameterError("requantize target " + std::to_string(target_bits) + " bits outside [1, " +
                         std::to_string(raw.bit_depth) + "]");
  }
  const double levels = std::ldexp(1.0, target_bits) - 1.0;
  RawImage out = raw;
  for (auto& plane : out.planes) {
    auto v = plane.values();
    const auto n = static_cast<std::ptrdiff_t>(v.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      v[i] = static_cast<float>(std::round(static_cast<double>(v[i]) * levels) / levels);
    }
  }
  return out;
}

DegradeResult degrade_level1(const RawImage& raw, const DegradationConfig& cfg, std::uint64_t per_image_seed) {
  cfg.validate();
  Rng kernel_rng(stable_mix(per_image_seed, kKernelStream));
  Rng profile_rng(stable_mix(per_image_seed, kProfileStream));

  DegradationRecord record;
  record.level = Level::one;
  record.per_image_seed = per_image_seed;
  record.stages.emplace_back(BlurStage{sample_kernel(cfg.kernel_pool, kernel_rng)});
  record.stages.emplace_back(
      NoiseStage{sample_profile(cfg.noise_registry, profile_rng), stable_mix(per_image_seed, kFieldStream)});
  record.stages.emplace_back(ClipStage{});
  return {run_stages(raw, record.stages), std::move(record)};
}

DegradeResult degrade_level2(const RawImage& raw, const DegradationConfig& cfg, std::uint64_t per_image_seed) {
  cfg.validate();
  Rng plan(stable_mix(per_image_seed, kPlanStream));
  Rng kernel_rng(stable_mix(per_image_seed, kKernelStream));
  Rng profile_rng(stable_mix(per_image_seed, kProfileStream));

  const int kernel_count = sample_kernel_count(cfg.kernel_pool, plan);
  std::vector<Stage> blurs;
  for (int i = 0; i < kernel_count; ++i) {
    blurs.emplace_back(BlurStage{sample_kernel(cfg.kernel_pool, kernel_rng)});
  }
  const Stage noise =
      NoiseStage{sample_profile(cfg.noise_registry, profile_rng), stable_mix(per_image_seed, kFieldStream)};

  const bool noise_first = plan.bernoulli(cfg.noise_before_blur_probability);
  const bool apply_exposure = plan.bernoulli(cfg.exposure.probability);
  double gain = 1.0;
  bool exposure_first = false;
  if (apply_exposure) {
    gain = plan.uniform(cfg.exposure.gain_lo, cfg.exposure.gain_hi);
    exposure_first = plan.bernoulli(0.5);
  }
  const bool apply_quant = plan.bernoulli(cfg.quantization.probability) && cfg.quantization.max_bits_drop > 0;
  int target_bits = raw.bit_depth;
  if (apply_quant) {
    target_bits = std::max(1, raw.bit_depth - plan.uniform_int(1, cfg.quantization.max_bits_drop));
  }

  DegradationRecord record;
  record.level = Level::two;
  record.per_image_seed = per_image_seed;
  auto& st = record.stages;
  if (apply_exposure && exposure_first) {
    st.emplace_back(ExposureStage{gain});
  }
  if (noise_first) {
    st.push_back(noise);
    st.insert(st.end(), blurs.begin(), blurs.end());
  } else {
    st.insert(st.end(), blurs.begin(), blurs.end());
    st.push_back(noise);
  }
  if (apply_exposure && !exposure_first) {
    st.emplace_back(ExposureStage{gain});
  }
  if (apply_quant) {
    st.emplace_back(QuantizeStage{target_bits});
  }
  st.emplace_back(ClipStage{});
  return {run_stages(raw, record.stages), std::move(record)};
}

DegradeResult degrade(const RawImage& raw, const DegradationConfig& cfg, std::uint64_t per_image_seed) {
  return cfg.level == Level::one ? degrade_level1(raw, cfg, per_image_seed)
                                 : degrade_level2(raw, cfg, per_image_seed);
}

RawImage replay(const RawImage& raw, const DegradationRecord& record) {
  if (record.record_version != kRecordVersion) {
    throw ReplayError("record version " + std::to_string(record.record_version) + " is not supported (expected " +
                      std::to_string(kRecordVersion) + ")");
  }
  if (record.stages.empty() || !std::holds_alternative<ClipStage>(record.stages.back())) {
    throw ReplayError("record is incomplete: the final clip stage is missing");
  }
  for (const Stage& s : record.stages) {
    if (const auto* q = std::get_if<QuantizeStage>(&s); q && (q->target_bits < 1 || q->target_bits > raw.bit_depth)) {
      throw ReplayError("record requantizes to " + std::to_string(q->target_bits) + " bits but the input has " +
                        std::to_string(raw.bit_depth));
    }
    if (const auto* b = std::get_if<BlurStage>(&s); b && b->kernel.size > std::min(raw.height(), raw.width())) {
      throw ReplayError("recorded kernel does not fit the input image");
    }
  }
  return run_stages(raw, record.stages);
}

std::vector<DegradeResult> degrade_batch(std::span<const RawImage> images, const DegradationConfig& cfg,
                                         int threads) {
  cfg.validate();
  const auto n = static_cast<std::int64_t>(images.size());
  std::vector<DegradeResult> results(images.size());
  std::vector<std::exception_ptr> errors(images.size());
  const int team = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(team)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      results[i] = degrade(images[i], cfg, stable_mix(cfg.master_seed, static_cast<std::uint64_t>(i)));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
  return results;
}

}  // namespace rawdeg
