#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rawdeg/degrade.hpp"
#include "rawdeg/raw_image.hpp"

namespace rawdeg {

// RawContainer binary layout, all integers little-endian:
//   bytes 0..6   magic "RAWIR1\0"
//   u32 width, u32 height            mosaic dimensions
//   u16 bit_depth, u16 black_level, u16 white_level
//   u8  cfa code (0 = RGGB)
//   u16 sensor_id length, then that many bytes
//   width * height u16 DN samples, row-major
inline constexpr char kContainerMagic[7] = {'R', 'A', 'W', 'I', 'R', '1', '\0'};

MosaicImage read_container(const std::filesystem::path& path);
void write_container(const MosaicImage& mosaic, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_container(const MosaicImage& mosaic);
MosaicImage decode_container(const std::vector<std::uint8_t>& bytes, const std::string& source);

/// Binary PGM (P5) with maxval in [256, 65535], big-endian samples.
MosaicImage read_pgm16(const std::filesystem::path& path, std::optional<int> black_level = std::nullopt,
                       std::optional<int> white_level = std::nullopt);

/// Container or PGM, chosen by the file's magic bytes.
MosaicImage read_mosaic(const std::filesystem::path& path, std::optional<int> black_level = std::nullopt,
                        std::optional<int> white_level = std::nullopt);

/// read_mosaic -> normalize -> pack_rggb.
RawImage load_raw(const std::filesystem::path& path);

/// Regular *.rawir / *.pgm files in `dir`, sorted by filename.
std::vector<std::filesystem::path> list_image_files(const std::filesystem::path& dir);

/// Binary P6, maxval 255: round(255 * v) or round(255 * v^(1/2.2)) with gamma.
void write_ppm(const RgbPreview& preview, const std::filesystem::path& path, bool gamma = false);
std::uint8_t to_display_byte(float value, bool gamma);

/// Writes a packed image as a container using the given DN calibration.
MosaicImage raw_to_mosaic(const RawImage& raw, int black_level, int white_level);

struct PatchCoord {
  int row = 0;
  int col = 0;
  bool operator==(const PatchCoord&) const = default;
};

struct Patch {
  PatchCoord coord;
  RawImage image;
};

/// Top-left coordinates (packed units) of a stride grid whose last row and
/// column are anchored flush to the bottom/right edge.
std::vector<PatchCoord> patch_grid(int height, int width, int patch_size, int stride);
RawImage crop(const RawImage& raw, PatchCoord at, int size);
std::vector<Patch> extract_patches(const RawImage& raw, int patch_size = 248, int stride = 248);

enum class Split { train, test };
std::string to_string(Split split);

struct ManifestEntry {
  std::string path;
  std::string device;
  std::string sensor;
  Split split = Split::train;
  std::vector<PatchCoord> patches;  // empty: full grid
  std::optional<int> black_level;   // PGM overrides
  std::optional<int> white_level;
};

/// JSON: {"manifest_version": 1, "entries": [{"path", "device", "sensor",
/// "split", "patches": [[row, col], ...]}]}
struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;  // relative entry paths resolve here

  void validate() const;
};

DatasetManifest manifest_from_string(const std::string& text, const std::filesystem::path& base_dir = {});
std::string manifest_to_string(const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

struct BuildOptions {
  std::filesystem::path out_dir;
  int patch_size = 248;
  int stride = 248;
  bool overwrite = false;
  int threads = 0;
};

struct BuildSummary {
  std::map<std::string, std::map<std::string, int>> counts;  // split -> device -> patches
  std::size_t total_patches = 0;
  std::vector<std::string> skipped;  // "<path>: <reason>"
  std::string summary_json;
};

/// Per entry: load, normalize, pack, extract patches, write the clean patch,
/// degrade with seed stable_mix(stable_mix(master, entry), patch), write the
/// degraded patch and its record. Emits manifest.json and summary.json.
BuildSummary build_dataset(const DatasetManifest& manifest, const DegradationConfig& cfg,
                           const BuildOptions& options);

/// Seed of patch `patch_index` of manifest entry `entry_index`.
std::uint64_t patch_seed(std::uint64_t master_seed, std::size_t entry_index, std::size_t patch_index);

}  // namespace rawdeg
