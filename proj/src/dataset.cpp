#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>

#include <omp.h>

#include <json.hpp>

#include "rawdeg/dataset_io.hpp"
#include "rawdeg/error.hpp"

namespace rawdeg {

using nlohmann::json;

namespace {

constexpr const char* kMarkerFile = ".rawdeg-dataset";

Split split_from_string(const std::string& s) {
  if (s == "train") {
    return Split::train;
  }
  if (s == "test") {
    return Split::test;
  }
  throw ValidationError("split must be 'train' or 'test', got '" + s + "'");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) {
    throw IoError("cannot write " + path.string());
  }
}

std::string patch_id(std::size_t entry_index, const std::string& stem, PatchCoord at) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "_r%05d_c%05d", at.row, at.col);
  char prefix[16];
  std::snprintf(prefix, sizeof(prefix), "%04zu_", entry_index);
  return prefix + stem + buf;
}

void prepare_out_dir(const BuildOptions& options) {
  namespace fs = std::filesystem;
  const fs::path& out = options.out_dir;
  std::error_code ec;
  if (fs::exists(out, ec)) {
    if (!fs::is_directory(out)) {
      throw IoError(out.string() + " exists and is not a directory");
    }
    if (!fs::is_empty(out)) {
      if (!options.overwrite) {
        throw IoError(out.string() + " is not empty; pass overwrite to replace it");
      }
      if (!fs::exists(out / kMarkerFile)) {
        throw IoError(out.string() + " was not produced by dataset build; refusing to overwrite it");
      }
      fs::remove_all(out);
    }
  }
  fs::create_directories(out);
  write_text(out / kMarkerFile, "rawdeg dataset tree\n");
}

}  // namespace

std::string to_string(Split split) { return split == Split::train ? "train" : "test"; }

std::uint64_t patch_seed(std::uint64_t master_seed, std::size_t entry_index, std::size_t patch_index) {
  return stable_mix(stable_mix(master_seed, entry_index), patch_index);
}

std::vector<PatchCoord> patch_grid(int height, int width, int patch_size, int stride) {
  if (patch_size <= 0 || stride <= 0) {
    throw ParameterError("patch size and stride must be positive");
  }
  if (patch_size > height || patch_size > width) {
    throw DimensionError("patch " + std::to_string(patch_size) + " is larger than the " + std::to_string(height) +
                         "x" + std::to_string(width) + " image");
  }
  auto axis = [&](int extent) {
    std::vector<int> starts;
    for (int p = 0; p + patch_size <= extent; p += stride) {
      starts.push_back(p);
    }
    if (starts.back() + patch_size < extent) {
      starts.push_back(extent - patch_size);
    }
    return starts;
  };
  std::vector<PatchCoord> grid;
  for (int r : axis(height)) {
    for (int c : axis(width)) {
      grid.push_back({r, c});
    }
  }
  return grid;
}

RawImage crop(const RawImage& raw, PatchCoord at, int size) {
  if (at.row < 0 || at.col < 0 || at.row + size > raw.height() || at.col + size > raw.width()) {
    throw DimensionError("patch at (" + std::to_string(at.row) + ", " + std::to_string(at.col) + ") of size " +
                         std::to_string(size) + " is outside the " + std::to_string(raw.height()) + "x" +
                         std::to_string(raw.width()) + " image");
  }
  RawImage out(size, size, raw.bit_depth);
  out.sensor_id = raw.sensor_id;
  for (int c = 0; c < RawImage::kChannels; ++c) {
    for (int i = 0; i < size; ++i) {
      const auto src = raw[c].row(at.row + i).subspan(at.col, size);
      std::copy(src.begin(), src.end(), out[c].row(i).begin());
    }
  }
  return out;
}

std::vector<Patch> extract_patches(const RawImage& raw, int patch_size, int stride) {
  std::vector<Patch> patches;
  for (const auto& at : patch_grid(raw.height(), raw.width(), patch_size, stride)) {
    patches.push_back({at, crop(raw, at, patch_size)});
  }
  return patches;
}

void DatasetManifest::validate() const {
  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (e.path.empty()) {
      throw ValidationError("manifest entry has an empty path");
    }
    if (!seen.insert(e.path).second) {
      throw ValidationError("manifest lists '" + e.path + "' more than once");
    }
    for (const auto& p : e.patches) {
      if (p.row < 0 || p.col < 0) {
        throw ValidationError("manifest entry '" + e.path + "' has a negative patch coordinate");
      }
    }
  }
}

DatasetManifest manifest_from_string(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("manifest_version", 1) != 1) {
      throw ValidationError("unsupported manifest_version");
    }
    DatasetManifest m;
    m.base_dir = base_dir;
    for (const auto& e : j.at("entries")) {
      ManifestEntry entry;
      entry.path = e.at("path").get<std::string>();
      entry.device = e.value("device", "unknown");
      entry.sensor = e.value("sensor", "unknown");
      entry.split = split_from_string(e.value("split", "train"));
      if (e.contains("patches")) {
        for (const auto& p : e.at("patches")) {
          entry.patches.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
        }
      }
      if (e.contains("black_level")) {
        entry.black_level = e.at("black_level").get<int>();
      }
      if (e.contains("white_level")) {
        entry.white_level = e.at("white_level").get<int>();
      }
      m.entries.push_back(std::move(entry));
    }
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("manifest has a malformed field: ") + e.what());
  }
}

std::string manifest_to_string(const DatasetManifest& manifest) {
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    json je = {{"path", e.path}, {"device", e.device}, {"sensor", e.sensor}, {"split", to_string(e.split)}};
    if (!e.patches.empty()) {
      json patches = json::array();
      for (const auto& p : e.patches) {
        patches.push_back({p.row, p.col});
      }
      je["patches"] = patches;
    }
    if (e.black_level) {
      je["black_level"] = *e.black_level;
    }
    if (e.white_level) {
      je["white_level"] = *e.white_level;
    }
    entries.push_back(je);
  }
  return json{{"manifest_version", 1}, {"entries", entries}}.dump(2) + "\n";
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open manifest " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return manifest_from_string(buf.str(), path.parent_path());
}

BuildSummary build_dataset(const DatasetManifest& manifest, const DegradationConfig& cfg,
                           const BuildOptions& options) {
  namespace fs = std::filesystem;
  manifest.validate();
  cfg.validate();
  prepare_out_dir(options);
  for (const char* split : {"train", "test"}) {
    for (const char* kind : {"clean", "degraded", "records"}) {
      fs::create_directories(options.out_dir / split / kind);
    }
  }

  BuildSummary summary;
  json pairs = json::array();
  const int team = options.threads > 0 ? options.threads : omp_get_max_threads();

  for (std::size_t e = 0; e < manifest.entries.size(); ++e) {
    const ManifestEntry& entry = manifest.entries[e];
    const fs::path source = fs::path(entry.path).is_absolute() ? fs::path(entry.path) : manifest.base_dir / entry.path;
    MosaicImage mosaic;
    std::vector<Patch> patches;
    try {
      mosaic = read_mosaic(source, entry.black_level, entry.white_level);
      const RawImage raw = pack_rggb(normalize(mosaic));
      if (entry.patches.empty()) {
        patches = extract_patches(raw, options.patch_size, options.stride);
      } else {
        for (const auto& at : entry.patches) {
          patches.push_back({at, crop(raw, at, options.patch_size)});
        }
      }
    } catch (const Error& err) {
      summary.skipped.push_back(entry.path + ": " + err.what());
      continue;
    }

    const std::string split = to_string(entry.split);
    const std::string stem = fs::path(entry.path).stem().string();
    const auto n = static_cast<std::int64_t>(patches.size());
    std::vector<std::string> ids(patches.size());
    std::vector<std::exception_ptr> errors(patches.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(team)
    for (std::int64_t p = 0; p < n; ++p) {
      try {
        const Patch& patch = patches[p];
        const std::string id = patch_id(e, stem, patch.coord);
        ids[p] = id;
        const auto seed = patch_seed(cfg.master_seed, e, static_cast<std::size_t>(p));
        const DegradeResult result = degrade(patch.image, cfg, seed);
        const fs::path dir = options.out_dir / split;
        write_container(raw_to_mosaic(patch.image, mosaic.black_level, mosaic.white_level),
                        dir / "clean" / (id + ".rawir"));
        write_container(raw_to_mosaic(result.image, mosaic.black_level, mosaic.white_level),
                        dir / "degraded" / (id + ".rawir"));
        write_record(result.record, dir / "records" / (id + ".json"));
      } catch (...) {
        errors[p] = std::current_exception();
      }
    }
    for (const auto& err : errors) {
      if (err) {
        std::rethrow_exception(err);
      }
    }
    for (std::size_t p = 0; p < patches.size(); ++p) {
      pairs.push_back({{"id", ids[p]},
                       {"split", split},
                       {"device", entry.device},
                       {"sensor", entry.sensor},
                       {"source", entry.path},
                       {"row", patches[p].coord.row},
                       {"col", patches[p].coord.col},
                       {"seed", patch_seed(cfg.master_seed, e, p)},
                       {"clean", split + "/clean/" + ids[p] + ".rawir"},
                       {"degraded", split + "/degraded/" + ids[p] + ".rawir"},
                       {"record", split + "/records/" + ids[p] + ".json"}});
    }
    summary.counts[split][entry.device] += static_cast<int>(patches.size());
    summary.total_patches += patches.size();
  }

  write_text(options.out_dir / "manifest.json",
             json{{"manifest_version", 1}, {"kind", "paired"}, {"pairs", pairs}}.dump(2) + "\n");

  json counts = json::object();
  for (const auto& [split, by_device] : summary.counts) {
    for (const auto& [device, count] : by_device) {
      counts[split][device] = count;
    }
  }
  const json j = {
      {"summary_version", 1},
      {"level", static_cast<int>(cfg.level)},
      {"master_seed", cfg.master_seed},
      {"patch_size", options.patch_size},
      {"stride", options.stride},
      {"total_patches", summary.total_patches},
      {"counts", counts},
      {"skipped", summary.skipped},
      {"config", json::parse(config_to_string(cfg))},
  };
  summary.summary_json = j.dump(2) + "\n";
  write_text(options.out_dir / "summary.json", summary.summary_json);
  return summary;
}

}  // namespace rawdeg
