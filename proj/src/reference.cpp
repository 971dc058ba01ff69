#include "rawdeg/reference.hpp"

#include <cmath>

#include "rawdeg/error.hpp"

namespace rawdeg::reference {

namespace {

int reflect101(int idx, int n) {
  if (idx < 0) {
    return -idx;
  }
  if (idx >= n) {
    return 2 * (n - 1) - idx;
  }
  return idx;
}

}  // namespace

RawImage convolve(const RawImage& raw, const Kernel& kernel) {
  if (kernel.size > std::min(raw.height(), raw.width())) {
    throw DimensionError("kernel does not fit the image");
  }
  const int h = raw.height();
  const int w = raw.width();
  const int r = kernel.radius();
  RawImage out(h, w, raw.bit_depth);
  out.sensor_id = raw.sensor_id;
  for (int c = 0; c < RawImage::kChannels; ++c) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        double acc = 0.0;
        for (int a = 0; a < kernel.size; ++a) {
          for (int b = 0; b < kernel.size; ++b) {
            const double weight = kernel(a, b);
            if (weight == 0.0) {
              continue;
            }
            acc += weight * static_cast<double>(raw[c](reflect101(i + a - r, h), reflect101(j + b - r, w)));
          }
        }
        out[c](i, j) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

RawImage add_shot_read_noise(const RawImage& raw, const NoiseProfile& profile, std::uint64_t field_seed) {
  if (profile.is_clean()) {
    return raw;
  }
  RawImage out = raw;
  for (int c = 0; c < RawImage::kChannels; ++c) {
    const std::uint64_t plane_seed = stable_mix(field_seed, static_cast<std::uint64_t>(c));
    auto v = out[c].values();
    for (std::size_t k = 0; k < v.size(); ++k) {
      const NormalPair z = counter_normal_pair(plane_seed, k / 2);
      const double x = v[k];
      const double sd = std::sqrt(std::max(0.0, profile.lambda_read + profile.lambda_shot * x));
      v[k] = static_cast<float>(x + sd * (k % 2 == 0 ? z.first : z.second));
    }
  }
  return out;
}

double ssim_plane(const Plane& pred, const Plane& gt, const SsimParams& params) {
  const int win = params.window;
  if (pred.height() < win || pred.width() < win) {
    throw DimensionError("plane smaller than the SSIM window");
  }
  const auto w1 = ssim_window_1d(params);
  const double c1 = std::pow(params.k1 * params.data_range, 2);
  const double c2 = std::pow(params.k2 * params.data_range, 2);
  const int out_h = pred.height() - win + 1;
  const int out_w = pred.width() - win + 1;
  double total = 0.0;
  for (int i = 0; i < out_h; ++i) {
    for (int j = 0; j < out_w; ++j) {
      double mx = 0, my = 0;
      for (int a = 0; a < win; ++a) {
        for (int b = 0; b < win; ++b) {
          const double wt = w1[a] * w1[b];
          mx += wt * pred(i + a, j + b);
          my += wt * gt(i + a, j + b);
        }
      }
      double vx = 0, vy = 0, cov = 0;
      for (int a = 0; a < win; ++a) {
        for (int b = 0; b < win; ++b) {
          const double wt = w1[a] * w1[b];
          const double dx = pred(i + a, j + b) - mx;
          const double dy = gt(i + a, j + b) - my;
          vx += wt * dx * dx;
          vy += wt * dy * dy;
          cov += wt * dx * dy;
        }
      }
      total += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
  }
  return total / (static_cast<double>(out_h) * out_w);
}

double ssim(const RawImage& pred, const RawImage& gt, const SsimParams& params) {
  double s = 0.0;
  for (int c = 0; c < RawImage::kChannels; ++c) {
    s += reference::ssim_plane(pred[c], gt[c], params);
  }
  return s / RawImage::kChannels;
}

double psnr(const RawImage& pred, const RawImage& gt) {
  double sse = 0.0;
  for (int c = 0; c < RawImage::kChannels; ++c) {
    for (int i = 0; i < pred.height(); ++i) {
      for (int j = 0; j < pred.width(); ++j) {
        const double d = static_cast<double>(pred[c](i, j)) - gt[c](i, j);
        sse += d * d;
      }
    }
  }
  const double mse = sse / static_cast<double>(pred.sample_count());
  return mse == 0.0 ? kPsnrInfinity : 10.0 * std::log10(1.0 / mse);
}

}  // namespace rawdeg::reference
