#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rawdeg {

enum class CfaPattern : std::uint8_t { rggb = 0 };

/// Sensor readout in digital numbers (DN), row-major, before normalization.
struct MosaicImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> data;
  int bit_depth = 16;
  int black_level = 0;
  int white_level = 65535;
  CfaPattern cfa = CfaPattern::rggb;
  std::string sensor_id;

  std::uint16_t at(int row, int col) const { return data[static_cast<std::size_t>(row) * width + col]; }
  int max_dn() const { return (1 << bit_depth) - 1; }

  /// Throws ValidationError / DimensionError when an invariant does not hold.
  void validate() const;

  bool operator==(const MosaicImage&) const = default;
};

/// Single real-valued channel, row-major.
class Plane {
public:
  Plane() = default;
  Plane(int height, int width, float fill = 0.0f)
      : height_(height), width_(width), data_(static_cast<std::size_t>(height) * width, fill) {}

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }

  float& operator()(int row, int col) { return data_[static_cast<std::size_t>(row) * width_ + col]; }
  float operator()(int row, int col) const { return data_[static_cast<std::size_t>(row) * width_ + col]; }

  std::span<float> row(int r) { return {data_.data() + static_cast<std::size_t>(r) * width_, static_cast<std::size_t>(width_)}; }
  std::span<const float> row(int r) const {
    return {data_.data() + static_cast<std::size_t>(r) * width_, static_cast<std::size_t>(width_)};
  }

  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }

  bool operator==(const Plane&) const = default;

private:
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

/// Normalized mosaic at full sensor resolution, values nominally in [0, 1].
struct NormalizedMosaic {
  Plane values;
  int bit_depth = 16;
  std::string sensor_id;

  int width() const { return values.width(); }
  int height() const { return values.height(); }
};

/// Packed RGGB image: four half-resolution planes in order R, G1, G2, B.
struct RawImage {
  static constexpr int kChannels = 4;
  enum Channel { R = 0, G1 = 1, G2 = 2, B = 3 };

  std::array<Plane, kChannels> planes;
  int bit_depth = 16;
  std::string sensor_id;

  RawImage() = default;
  RawImage(int height_p, int width_p, int bit_depth_, float fill = 0.0f);

  int height() const { return planes[0].height(); }
  int width() const { return planes[0].width(); }
  std::size_t sample_count() const { return kChannels * planes[0].size(); }

  Plane& operator[](int c) { return planes[c]; }
  const Plane& operator[](int c) const { return planes[c]; }

  bool operator==(const RawImage&) const = default;
};

/// Linear-light RGB preview at mosaic resolution.
struct RgbPreview {
  std::array<Plane, 3> channels;
  int width() const { return channels[0].width(); }
  int height() const { return channels[0].height(); }
};

/// (DN - black) / (white - black), clamped to [0, 1].
NormalizedMosaic normalize(const MosaicImage& mosaic);

RawImage pack_rggb(const NormalizedMosaic& mosaic);
NormalizedMosaic unpack_rggb(const RawImage& raw);

/// Bilinear CFA interpolation with replicate padding of each colour plane.
RgbPreview demosaic_bilinear(const RawImage& raw);

inline float clip01(float v) { return v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v); }
void clip01_inplace(RawImage& raw);
RawImage clip01(RawImage raw);

/// Maps normalized values back to DNs: black + round_half_away((white - black) * clamp(v, 0, 1)).
MosaicImage denormalize(const NormalizedMosaic& mosaic, int black_level, int white_level);

}  // namespace rawdeg
