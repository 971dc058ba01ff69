#include "rawdeg/raw_image.hpp"

#include <algorithm>
#include <cmath>

#include "rawdeg/error.hpp"

namespace rawdeg {

void MosaicImage::validate() const {
  if (bit_depth < 8 || bit_depth > 16) {
    throw ValidationError("bit_depth " + std::to_string(bit_depth) + " outside [8, 16]");
  }
  if (width <= 0 || height <= 0) {
    throw DimensionError("mosaic dimensions must be positive");
  }
  if (width % 2 != 0 || height % 2 != 0) {
    throw DimensionError("mosaic dimensions " + std::to_string(width) + "x" + std::to_string(height) +
                         " are not even");
  }
  if (cfa != CfaPattern::rggb) {
    throw ValidationError("only the RGGB CFA pattern is supported");
  }
  if (black_level < 0 || black_level >= white_level) {
    throw ValidationError("black_level " + std::to_string(black_level) + " must be below white_level " +
                          std::to_string(white_level));
  }
  if (white_level > max_dn()) {
    throw ValidationError("white_level " + std::to_string(white_level) + " exceeds 2^bit_depth - 1");
  }
  if (data.size() != static_cast<std::size_t>(width) * height) {
    throw DimensionError("mosaic data size does not match width * height");
  }
  const int limit = max_dn();
  if (std::any_of(data.begin(), data.end(), [limit](std::uint16_t v) { return v > limit; })) {
    throw ValidationError("DN sample exceeds 2^bit_depth - 1");
  }
}

RawImage::RawImage(int height_p, int width_p, int bit_depth_, float fill) : bit_depth(bit_depth_) {
  for (auto& p : planes) {
    p = Plane(height_p, width_p, fill);
  }
}

NormalizedMosaic normalize(const MosaicImage& mosaic) {
  mosaic.validate();
  NormalizedMosaic out{Plane(mosaic.height, mosaic.width), mosaic.bit_depth, mosaic.sensor_id};
  const double black = mosaic.black_level;
  const double range = static_cast<double>(mosaic.white_level) - black;
  auto dst = out.values.values();
  const auto n = static_cast<std::ptrdiff_t>(mosaic.data.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double v = (static_cast<double>(mosaic.data[i]) - black) / range;
    dst[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return out;
}

RawImage pack_rggb(const NormalizedMosaic& mosaic) {
  const int h = mosaic.height();
  const int w = mosaic.width();
  if (h % 2 != 0 || w % 2 != 0) {
    throw DimensionError("cannot pack a " + std::to_string(w) + "x" + std::to_string(h) +
                         " mosaic: dimensions must be even");
  }
  RawImage raw(h / 2, w / 2, mosaic.bit_depth);
  raw.sensor_id = mosaic.sensor_id;
  const Plane& m = mosaic.values;
  for (int i = 0; i < h / 2; ++i) {
    for (int j = 0; j < w / 2; ++j) {
      raw[RawImage::R](i, j) = m(2 * i, 2 * j);
      raw[RawImage::G1](i, j) = m(2 * i, 2 * j + 1);
      raw[RawImage::G2](i, j) = m(2 * i + 1, 2 * j);
      raw[RawImage::B](i, j) = m(2 * i + 1, 2 * j + 1);
    }
  }
  return raw;
}

NormalizedMosaic unpack_rggb(const RawImage& raw) {
  const int hp = raw.height();
  const int wp = raw.width();
  for (const auto& p : raw.planes) {
    if (p.height() != hp || p.width() != wp) {
      throw DimensionError("RawImage planes have mismatched dimensions");
    }
  }
  NormalizedMosaic out{Plane(2 * hp, 2 * wp), raw.bit_depth, raw.sensor_id};
  Plane& m = out.values;
  for (int i = 0; i < hp; ++i) {
    for (int j = 0; j < wp; ++j) {
      m(2 * i, 2 * j) = raw[RawImage::R](i, j);
      m(2 * i, 2 * j + 1) = raw[RawImage::G1](i, j);
      m(2 * i + 1, 2 * j) = raw[RawImage::G2](i, j);
      m(2 * i + 1, 2 * j + 1) = raw[RawImage::B](i, j);
    }
  }
  return out;
}

namespace {

// Replicate-padded read of a packed plane.
struct Clamped {
  const Plane& p;
  float operator()(int i, int j) const {
    i = std::clamp(i, 0, p.height() - 1);
    j = std::clamp(j, 0, p.width() - 1);
    return p(i, j);
  }
};

float avg2(float a, float b) { return 0.5f * (a + b); }
float avg4(float a, float b, float c, float d) { return 0.25f * ((a + b) + (c + d)); }

}  // namespace

RgbPreview demosaic_bilinear(const RawImage& raw) {
  const int hp = raw.height();
  const int wp = raw.width();
  RgbPreview out;
  for (auto& c : out.channels) {
    c = Plane(2 * hp, 2 * wp);
  }
  const Clamped r{raw[RawImage::R]}, g1{raw[RawImage::G1]}, g2{raw[RawImage::G2]}, b{raw[RawImage::B]};
  Plane& outR = out.channels[0];
  Plane& outG = out.channels[1];
  Plane& outB = out.channels[2];

#pragma omp parallel for schedule(static)
  for (int i = 0; i < hp; ++i) {
    for (int j = 0; j < wp; ++j) {
      const int y = 2 * i, x = 2 * j;
      // R site
      outR(y, x) = r(i, j);
      outG(y, x) = avg4(g1(i, j - 1), g1(i, j), g2(i - 1, j), g2(i, j));
      outB(y, x) = avg4(b(i - 1, j - 1), b(i - 1, j), b(i, j - 1), b(i, j));
      // G1 site
      outR(y, x + 1) = avg2(r(i, j), r(i, j + 1));
      outG(y, x + 1) = g1(i, j);
      outB(y, x + 1) = avg2(b(i - 1, j), b(i, j));
      // G2 site
      outR(y + 1, x) = avg2(r(i, j), r(i + 1, j));
      outG(y + 1, x) = g2(i, j);
      outB(y + 1, x) = avg2(b(i, j - 1), b(i, j));
      // B site
      outR(y + 1, x + 1) = avg4(r(i, j), r(i, j + 1), r(i + 1, j), r(i + 1, j + 1));
      outG(y + 1, x + 1) = avg4(g2(i, j), g2(i, j + 1), g1(i, j), g1(i + 1, j));
      outB(y + 1, x + 1) = b(i, j);
    }
  }
  return out;
}

void clip01_inplace(RawImage& raw) {
  for (auto& p : raw.planes) {
    auto v = p.values();
    const auto n = static_cast<std::ptrdiff_t>(v.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      v[i] = clip01(v[i]);
    }
  }
}

RawImage clip01(RawImage raw) {
  clip01_inplace(raw);
  return raw;
}

MosaicImage denormalize(const NormalizedMosaic& mosaic, int black_level, int white_level) {
  MosaicImage out;
  out.width = mosaic.width();
  out.height = mosaic.height();
  out.bit_depth = mosaic.bit_depth;
  out.black_level = black_level;
  out.white_level = white_level;
  out.sensor_id = mosaic.sensor_id;
  out.data.resize(mosaic.values.size());
  const double range = static_cast<double>(white_level) - black_level;
  const auto src = mosaic.values.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double v = std::clamp(static_cast<double>(src[i]), 0.0, 1.0);
    out.data[i] = static_cast<std::uint16_t>(black_level + std::round(v * range));
  }
  out.validate();
  return out;
}

}  // namespace rawdeg
