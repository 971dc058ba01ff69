#include <algorithm>
#include <vector>

#include "rawdeg/error.hpp"
#include "rawdeg/kernels.hpp"

namespace rawdeg {

namespace {

struct Tap {
  int row;
  int col;
  double weight;
};

// Non-zero taps in raster order; skipping exact zeros does not change any sum.
std::vector<Tap> nonzero_taps(const Kernel& k) {
  std::vector<Tap> taps;
  for (int a = 0; a < k.size; ++a) {
    for (int b = 0; b < k.size; ++b) {
      if (k(a, b) != 0.0) {
        taps.push_back({a, b, k(a, b)});
      }
    }
  }
  return taps;
}

int reflect101(int idx, int n) {
  if (idx < 0) {
    return -idx;
  }
  if (idx >= n) {
    return 2 * (n - 1) - idx;
  }
  return idx;
}

struct Padded {
  int height = 0;
  int width = 0;
  std::vector<float> data;
  const float* row(int r) const { return data.data() + static_cast<std::size_t>(r) * width; }
};

Padded pad_reflect101(const Plane& p, int radius) {
  Padded out{p.height() + 2 * radius, p.width() + 2 * radius, {}};
  out.data.resize(static_cast<std::size_t>(out.height) * out.width);
  std::vector<int> cols(out.width);
  for (int c = 0; c < out.width; ++c) {
    cols[c] = reflect101(c - radius, p.width());
  }
  for (int r = 0; r < out.height; ++r) {
    const auto src = p.row(reflect101(r - radius, p.height()));
    float* dst = out.data.data() + static_cast<std::size_t>(r) * out.width;
    for (int c = 0; c < out.width; ++c) {
      dst[c] = src[cols[c]];
    }
  }
  return out;
}

__attribute__((target_clones("avx2", "default")))
void correlate_row(const Padded& in, int out_row, const std::vector<Tap>& taps, double* acc, float* out, int width) {
  std::fill(acc, acc + width, 0.0);
  for (const Tap& t : taps) {
    const float* src = in.row(out_row + t.row) + t.col;
    const double w = t.weight;
    for (int j = 0; j < width; ++j) {
      acc[j] += w * static_cast<double>(src[j]);
    }
  }
  for (int j = 0; j < width; ++j) {
    out[j] = static_cast<float>(acc[j]);
  }
}

void check_fits(const Kernel& kernel, int height, int width) {
  if (kernel.size > std::min(height, width)) {
    throw DimensionError("kernel of size " + std::to_string(kernel.size) + " does not fit a " +
                         std::to_string(height) + "x" + std::to_string(width) + " plane");
  }
}

}  // namespace

Plane convolve(const Plane& plane, const Kernel& kernel) {
  check_fits(kernel, plane.height(), plane.width());
  const Padded padded = pad_reflect101(plane, kernel.radius());
  const auto taps = nonzero_taps(kernel);
  Plane out(plane.height(), plane.width());
  const int width = plane.width();
#pragma omp parallel
  {
    std::vector<double> acc(width);
#pragma omp for schedule(static)
    for (int i = 0; i < plane.height(); ++i) {
      correlate_row(padded, i, taps, acc.data(), out.row(i).data(), width);
    }
  }
  return out;
}

RawImage convolve(const RawImage& raw, const Kernel& kernel) {
  check_fits(kernel, raw.height(), raw.width());
  if (kernel.size == 1 && kernel.weights[0] == 1.0) {
    return raw;
  }
  const auto taps = nonzero_taps(kernel);
  std::array<Padded, RawImage::kChannels> padded;
  for (int c = 0; c < RawImage::kChannels; ++c) {
    padded[c] = pad_reflect101(raw[c], kernel.radius());
  }
  RawImage out(raw.height(), raw.width(), raw.bit_depth);
  out.sensor_id = raw.sensor_id;
  const int height = raw.height();
  const int width = raw.width();
#pragma omp parallel
  {
    std::vector<double> acc(width);
#pragma omp for collapse(2) schedule(static)
    for (int c = 0; c < RawImage::kChannels; ++c) {
      for (int i = 0; i < height; ++i) {
        correlate_row(padded[c], i, taps, acc.data(), out[c].row(i).data(), width);
      }
    }
  }
  return out;
}

}  // namespace rawdeg
