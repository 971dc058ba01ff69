#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "rawdeg/dataset_io.hpp"
#include "rawdeg/error.hpp"

namespace rawdeg {

namespace {

constexpr std::size_t kMagicSize = sizeof(kContainerMagic);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw IoError("failed writing " + path.string());
  }
}

class Reader {
public:
  Reader(const std::vector<std::uint8_t>& bytes, const std::string& source) : bytes_(bytes), source_(source) {}

  std::uint64_t le(int width) {
    need(width, "header");
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += width;
    return v;
  }

  std::string str(std::size_t n) {
    need(n, "sensor_id");
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }

private:
  void need(std::size_t n, const char* what) const {
    if (pos_ + n > bytes_.size()) {
      throw FormatError(source_ + ": truncated " + what + " (file is " + std::to_string(bytes_.size()) + " bytes)");
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int width) {
  for (int i = 0; i < width; ++i) {
    out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
  }
}

int bits_for(int maxval) {
  int bits = 1;
  while ((1 << bits) - 1 < maxval) {
    ++bits;
  }
  return bits;
}

}  // namespace

std::vector<std::uint8_t> encode_container(const MosaicImage& mosaic) {
  mosaic.validate();
  if (mosaic.sensor_id.size() > 0xFFFF) {
    throw ValidationError("sensor_id longer than 65535 bytes");
  }
  std::vector<std::uint8_t> out(kContainerMagic, kContainerMagic + kMagicSize);
  out.reserve(kMagicSize + 17 + mosaic.sensor_id.size() + mosaic.data.size() * 2);
  put_le(out, static_cast<std::uint32_t>(mosaic.width), 4);
  put_le(out, static_cast<std::uint32_t>(mosaic.height), 4);
  put_le(out, static_cast<std::uint16_t>(mosaic.bit_depth), 2);
  put_le(out, static_cast<std::uint16_t>(mosaic.black_level), 2);
  put_le(out, static_cast<std::uint16_t>(mosaic.white_level), 2);
  put_le(out, static_cast<std::uint8_t>(mosaic.cfa), 1);
  put_le(out, mosaic.sensor_id.size(), 2);
  out.insert(out.end(), mosaic.sensor_id.begin(), mosaic.sensor_id.end());
  for (std::uint16_t v : mosaic.data) {
    put_le(out, v, 2);
  }
  return out;
}

MosaicImage decode_container(const std::vector<std::uint8_t>& bytes, const std::string& source) {
  if (bytes.size() < kMagicSize || std::memcmp(bytes.data(), kContainerMagic, kMagicSize) != 0) {
    throw FormatError(source + ": bad magic, not a RAWIR1 container");
  }
  std::vector<std::uint8_t> rest(bytes.begin() + kMagicSize, bytes.end());
  Reader r(rest, source);
  MosaicImage m;
  m.width = static_cast<int>(r.le(4));
  m.height = static_cast<int>(r.le(4));
  m.bit_depth = static_cast<int>(r.le(2));
  m.black_level = static_cast<int>(r.le(2));
  m.white_level = static_cast<int>(r.le(2));
  const auto cfa = r.le(1);
  if (cfa != 0) {
    throw ValidationError(source + ": unsupported CFA code " + std::to_string(cfa) + " (only RGGB = 0)");
  }
  m.cfa = CfaPattern::rggb;
  m.sensor_id = r.str(static_cast<std::size_t>(r.le(2)));

  const std::size_t expected = static_cast<std::size_t>(m.width) * static_cast<std::size_t>(m.height) * 2;
  const std::size_t actual = rest.size() - r.pos();
  if (actual != expected) {
    throw FormatError(source + ": payload is " + std::to_string(actual) + " bytes, expected " +
                      std::to_string(expected) + (actual < expected ? " (truncated)" : " (trailing data)"));
  }
  m.data.resize(static_cast<std::size_t>(m.width) * m.height);
  const std::uint8_t* p = rest.data() + r.pos();
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    m.data[i] = static_cast<std::uint16_t>(p[2 * i] | (p[2 * i + 1] << 8));
  }
  try {
    m.validate();
  } catch (const Error& e) {
    throw ValidationError(source + ": " + e.what());
  }
  return m;
}

MosaicImage read_container(const std::filesystem::path& path) {
  return decode_container(read_file(path), path.string());
}

void write_container(const MosaicImage& mosaic, const std::filesystem::path& path) {
  write_file(path, encode_container(mosaic));
}

MosaicImage read_pgm16(const std::filesystem::path& path, std::optional<int> black_level,
                       std::optional<int> white_level) {
  const auto bytes = read_file(path);
  const std::string source = path.string();
  std::size_t pos = 0;
  auto skip_space_and_comments = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') {
          ++pos;
        }
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_token = [&] {
    skip_space_and_comments();
    std::string tok;
    while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') {
      tok.push_back(static_cast<char>(bytes[pos++]));
    }
    return tok;
  };
  auto read_int = [&](const char* what) {
    const std::string tok = read_token();
    if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(c); }) ||
        tok.size() > 9) {
      throw FormatError(source + ": malformed PGM header (" + what + " = '" + tok + "')");
    }
    return std::stoi(tok);
  };

  const std::string magic = read_token();
  if (magic == "P2") {
    throw FormatError(source + ": ASCII PGM (P2) is not supported, convert to binary P5");
  }
  if (magic != "P5") {
    throw FormatError(source + ": not a binary PGM (magic '" + magic + "')");
  }
  const int width = read_int("width");
  const int height = read_int("height");
  const int maxval = read_int("maxval");
  if (maxval <= 255) {
    throw FormatError(source + ": maxval " + std::to_string(maxval) + " is 8-bit; RAW input needs maxval >= 256");
  }
  if (maxval > 65535) {
    throw FormatError(source + ": maxval " + std::to_string(maxval) + " exceeds 65535");
  }
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw FormatError(source + ": malformed PGM header (missing separator before raster)");
  }
  ++pos;
  const std::size_t expected = static_cast<std::size_t>(width) * height * 2;
  if (bytes.size() - pos < expected) {
    throw FormatError(source + ": PGM raster is " + std::to_string(bytes.size() - pos) + " bytes, expected " +
                      std::to_string(expected));
  }
  MosaicImage m;
  m.width = width;
  m.height = height;
  m.bit_depth = std::max(8, bits_for(maxval));
  m.black_level = black_level.value_or(0);
  m.white_level = white_level.value_or(maxval);
  m.data.resize(static_cast<std::size_t>(width) * height);
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    m.data[i] = static_cast<std::uint16_t>((bytes[pos + 2 * i] << 8) | bytes[pos + 2 * i + 1]);
  }
  try {
    m.validate();
  } catch (const Error& e) {
    throw ValidationError(source + ": " + e.what());
  }
  return m;
}

MosaicImage read_mosaic(const std::filesystem::path& path, std::optional<int> black_level,
                        std::optional<int> white_level) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  char head[2] = {0, 0};
  in.read(head, 2);
  if (head[0] == 'P') {
    return read_pgm16(path, black_level, white_level);
  }
  MosaicImage m = read_container(path);
  if (black_level || white_level) {
    m.black_level = black_level.value_or(m.black_level);
    m.white_level = white_level.value_or(m.white_level);
    m.validate();
  }
  return m;
}

RawImage load_raw(const std::filesystem::path& path) { return pack_rggb(normalize(read_mosaic(path))); }

std::vector<std::filesystem::path> list_image_files(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw IoError(dir.string() + " is not a directory");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".rawir" || ext == ".pgm")) {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
  return files;
}

std::uint8_t to_display_byte(float value, bool gamma) {
  double v = std::clamp(static_cast<double>(value), 0.0, 1.0);
  if (gamma) {
    v = std::pow(v, 1.0 / 2.2);
  }
  return static_cast<std::uint8_t>(std::round(255.0 * v));
}

void write_ppm(const RgbPreview& preview, const std::filesystem::path& path, bool gamma) {
  const std::string header =
      "P6\n" + std::to_string(preview.width()) + " " + std::to_string(preview.height()) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + static_cast<std::size_t>(preview.width()) * preview.height() * 3);
  for (int r = 0; r < preview.height(); ++r) {
    for (int c = 0; c < preview.width(); ++c) {
      for (const auto& ch : preview.channels) {
        bytes.push_back(to_display_byte(ch(r, c), gamma));
      }
    }
  }
  write_file(path, bytes);
}

MosaicImage raw_to_mosaic(const RawImage& raw, int black_level, int white_level) {
  return denormalize(unpack_rggb(raw), black_level, white_level);
}

}  // namespace rawdeg
