#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "rawdeg/raw_image.hpp"
#include "rawdeg/rng.hpp"

namespace rawdeg {

enum class KernelKind { identity, iso_gaussian, aniso_gaussian, disk, motion, measured_psf };

std::string_view to_string(KernelKind kind);
KernelKind kernel_kind_from_string(std::string_view name);

/// Realized generator parameters. Only the fields relevant to the kind are
/// meaningful; together with the kind they regenerate the kernel exactly.
struct KernelParams {
  int size = 1;  // gaussian: requested side length
  double sigma_x = 0.0;
  double sigma_y = 0.0;
  double theta = 0.0;
  double radius = 0.0;
  double length = 0.0;
  double angle = 0.0;
  double wiggle = 0.0;
  std::uint64_t trajectory_seed = 0;
  std::string source;  // measured_psf: originating file

  bool operator==(const KernelParams&) const = default;
};

/// Normalized, non-negative, odd-sized square blur kernel (row-major).
struct Kernel {
  int size = 1;
  std::vector<double> weights{1.0};
  KernelKind kind = KernelKind::identity;
  KernelParams params;
  std::vector<std::string> warnings;

  double operator()(int row, int col) const { return weights[static_cast<std::size_t>(row) * size + col]; }
  int radius() const { return size / 2; }
  double sum() const;

  /// Throws ValidationError unless non-negative, odd-sized and summing to 1 within 1e-6.
  void validate() const;
};

Kernel identity_kernel();

/// exp(-1/2 d^T S^-1 d) on a size x size grid, S = R(theta) diag(sx^2, sy^2) R(theta)^T.
Kernel gaussian_kernel(int size, double sigma_x, double sigma_y, double theta);

/// Uniform disk with exact area-fraction boundary cells; zero border rings trimmed.
Kernel disk_kernel(double radius);

/// Random-walk camera-shake trajectory rasterized with bilinear splatting.
/// Draws the trajectory seed from `rng`.
Kernel motion_kernel(double length, double angle, double wiggle, Rng& rng);
Kernel motion_kernel_from_seed(double length, double angle, double wiggle, std::uint64_t trajectory_seed);

/// Reads the `RAWKERN <size>` text format; negatives clamped to 0 then renormalized.
Kernel load_psf(const std::filesystem::path& path);
Kernel parse_psf(std::istream& in, const std::string& source);
void write_psf(const Kernel& kernel, const std::filesystem::path& path);

/// Builds a kernel from raw weights (clamp negatives, renormalize).
Kernel kernel_from_weights(int size, std::vector<double> weights, KernelKind kind, KernelParams params);

/// Regenerates a kernel from a recorded kind + params (measured PSFs need `weights`).
Kernel regenerate_kernel(KernelKind kind, const KernelParams& params, const std::vector<double>& weights = {});

/// Full 2-D convolution of two kernels. Correlating with compose(a, b) equals
/// correlating with a then with b (away from borders).
Kernel compose(const Kernel& first, const Kernel& second);

/// Parameter ranges the pool samples from (uniformly).
struct KernelRanges {
  int size_min = 7;
  int size_max = 21;
  double sigma_min = 0.2;
  double sigma_max = 4.0;
  double theta_max = 3.141592653589793;
  double disk_radius_min = 0.5;
  double disk_radius_max = 6.0;
  double motion_length_min = 1.0;
  double motion_length_max = 21.0;
  double wiggle_min = 0.0;
  double wiggle_max = 0.5;
};

struct KernelPoolEntry {
  KernelKind kind = KernelKind::iso_gaussian;
  double weight = 0.0;
  std::vector<Kernel> psfs;  // measured_psf entries: one is drawn uniformly
};

/// Kernel generators and measured PSFs with per-kind sampling weights and
/// the probabilities of applying 0, 1 or 2 kernels.
struct KernelPool {
  std::vector<KernelPoolEntry> entries;
  std::array<double, 3> count_probabilities{0.1, 0.6, 0.3};
  KernelRanges ranges;

  void validate() const;

  static KernelPool defaults();
  static KernelPool identity_only();
};

int sample_kernel_count(const KernelPool& pool, Rng& rng);
Kernel sample_kernel(const KernelPool& pool, Rng& rng);
/// Draws a count in {0, 1, 2}, then that many kernels, all from `rng`.
std::vector<Kernel> sample_kernels(const KernelPool& pool, Rng& rng);

/// Correlates each packed plane with the kernel, reflect-101 borders, same
/// output size. Parallel over planes and rows.
RawImage convolve(const RawImage& raw, const Kernel& kernel);
Plane convolve(const Plane& plane, const Kernel& kernel);

}  // namespace rawdeg
