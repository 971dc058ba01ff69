#pragma once

// Straightforward single-threaded versions of the parallel kernels. They are
// kept for cross-checking in tests and as the baseline in bench/.

#include <cstdint>

#include "rawdeg/kernels.hpp"
#include "rawdeg/metrics.hpp"
#include "rawdeg/noise.hpp"
#include "rawdeg/raw_image.hpp"

namespace rawdeg::reference {

/// Per-pixel loop over every kernel tap with reflect-101 indexing.
RawImage convolve(const RawImage& raw, const Kernel& kernel);

/// Sample-by-sample noise with the same counter-based field as the parallel path.
RawImage add_shot_read_noise(const RawImage& raw, const NoiseProfile& profile, std::uint64_t field_seed);

/// Full 2-D window evaluated independently at every valid position.
double ssim_plane(const Plane& pred, const Plane& gt, const SsimParams& params = {});
double ssim(const RawImage& pred, const RawImage& gt, const SsimParams& params = {});

double psnr(const RawImage& pred, const RawImage& gt);

}  // namespace rawdeg::reference
