#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rawdeg/kernels.hpp"
#include "rawdeg/noise.hpp"
#include "rawdeg/raw_image.hpp"

namespace rawdeg {

enum class Level { one = 1, two = 2 };

inline constexpr std::uint64_t kDefaultMasterSeed = 0x5EED;
inline constexpr int kRecordVersion = 1;

struct ExposureSettings {
  double probability = 0.3;
  double gain_lo = 0.25;
  double gain_hi = 1.0;
};

struct QuantizationSettings {
  double probability = 0.3;
  int max_bits_drop = 2;
};

/// Sampling ranges and probabilities for the degradation pipeline.
struct DegradationConfig {
  Level level = Level::two;
  KernelPool kernel_pool = KernelPool::defaults();
  ProfileRegistry noise_registry = ProfileRegistry::defaults();
  ExposureSettings exposure;
  QuantizationSettings quantization;
  /// Chance that noise is injected before the blur kernels.
  double noise_before_blur_probability = 0.5;
  std::uint64_t master_seed = kDefaultMasterSeed;

  void validate() const;
  static DegradationConfig defaults(Level level = Level::two);
};

// Realized pipeline stages.
struct BlurStage {
  Kernel kernel;
};
struct NoiseStage {
  NoiseProfile profile;
  std::uint64_t field_seed = 0;
};
struct ExposureStage {
  double gain = 1.0;
};
struct QuantizeStage {
  int target_bits = 16;
};
struct ClipStage {};

using Stage = std::variant<BlurStage, NoiseStage, ExposureStage, QuantizeStage, ClipStage>;

std::string_view stage_name(const Stage& stage);

/// Everything needed to reproduce one degraded image from its clean input.
struct DegradationRecord {
  int record_version = kRecordVersion;
  Level level = Level::two;
  std::uint64_t per_image_seed = 0;
  std::vector<Stage> stages;
};

struct DegradeResult {
  RawImage image;
  DegradationRecord record;
};

/// Multiplies every sample by gain in (0, 1].
RawImage exposure_scale(const RawImage& raw, double gain);

/// round_half_away(x * (2^b - 1)) / (2^b - 1), 1 <= b <= raw.bit_depth.
RawImage requantize(const RawImage& raw, int target_bits);

/// y = clip(x (*) k + n): one kernel, one profile.
DegradeResult degrade_level1(const RawImage& raw, const DegradationConfig& cfg, std::uint64_t per_image_seed);

/// y = clip(Q(E((x (*) k_i (*) k_j) + n))) with randomized stage order.
DegradeResult degrade_level2(const RawImage& raw, const DegradationConfig& cfg, std::uint64_t per_image_seed);

/// Dispatches on cfg.level.
DegradeResult degrade(const RawImage& raw, const DegradationConfig& cfg, std::uint64_t per_image_seed);

/// Re-applies recorded stages. Bit-identical to the original output.
RawImage replay(const RawImage& raw, const DegradationRecord& record);

/// Item i uses stable_mix(cfg.master_seed, i). `threads` <= 0 keeps the
/// OpenMP default. Output is independent of the thread count.
std::vector<DegradeResult> degrade_batch(std::span<const RawImage> images, const DegradationConfig& cfg,
                                         int threads = 0);

// Record serialization (JSON text, versioned by record_version).
std::string record_to_string(const DegradationRecord& record);
DegradationRecord record_from_string(const std::string& text);
void write_record(const DegradationRecord& record, const std::filesystem::path& path);
DegradationRecord read_record(const std::filesystem::path& path);

// Config serialization; unspecified keys keep their defaults.
std::string config_to_string(const DegradationConfig& cfg);
DegradationConfig config_from_string(const std::string& text, const std::filesystem::path& base_dir = {});
DegradationConfig load_config(const std::filesystem::path& path);

}  // namespace rawdeg
