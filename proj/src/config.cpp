#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rawdeg/degrade.hpp"
#include "rawdeg/error.hpp"

namespace rawdeg {

using nlohmann::json;

namespace {

json range_json(const std::optional<LogRange>& r) {
  return r ? json::array({r->lo, r->hi}) : json(nullptr);
}

std::optional<LogRange> range_from(const json& j) {
  if (j.is_null()) {
    return std::nullopt;
  }
  if (!j.is_array() || j.size() != 2) {
    throw ValidationError("ranges must be [lo, hi] or null");
  }
  return LogRange{j[0].get<double>(), j[1].get<double>()};
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

void parse_pool(const json& j, KernelPool& pool, const std::filesystem::path& base_dir) {
  if (j.contains("count_probabilities")) {
    pool.count_probabilities = j.at("count_probabilities").get<std::array<double, 3>>();
  }
  if (j.contains("entries")) {
    pool.entries.clear();
    for (const auto& e : j.at("entries")) {
      KernelPoolEntry entry;
      entry.kind = kernel_kind_from_string(e.at("kind").get<std::string>());
      entry.weight = e.at("weight").get<double>();
      if (e.contains("files")) {
        for (const auto& f : e.at("files")) {
          entry.psfs.push_back(load_psf(resolve(base_dir, f.get<std::string>())));
        }
      }
      if (e.contains("kernels")) {
        for (const auto& k : e.at("kernels")) {
          KernelParams params;
          params.source = k.value("source", std::string{});
          entry.psfs.push_back(kernel_from_weights(k.at("size").get<int>(), k.at("weights").get<std::vector<double>>(),
                                                   KernelKind::measured_psf, params));
        }
      }
      pool.entries.push_back(std::move(entry));
    }
  }
  if (j.contains("ranges")) {
    const json& r = j.at("ranges");
    auto& out = pool.ranges;
    auto pair = [&](const char* key, auto& lo, auto& hi) {
      if (r.contains(key)) {
        const auto& v = r.at(key);
        if (!v.is_array() || v.size() != 2) {
          throw ValidationError(std::string("kernel range '") + key + "' must be [lo, hi]");
        }
        lo = v[0].get<std::decay_t<decltype(lo)>>();
        hi = v[1].get<std::decay_t<decltype(hi)>>();
      }
    };
    pair("size", out.size_min, out.size_max);
    pair("sigma", out.sigma_min, out.sigma_max);
    pair("disk_radius", out.disk_radius_min, out.disk_radius_max);
    pair("motion_length", out.motion_length_min, out.motion_length_max);
    pair("wiggle", out.wiggle_min, out.wiggle_max);
    if (r.contains("theta_max")) {
      out.theta_max = r.at("theta_max").get<double>();
    }
  }
}

void parse_noise(const json& j, ProfileRegistry& reg, const std::filesystem::path& base_dir) {
  if (j.contains("registry_file")) {
    const ProfileRegistry loaded = read_registry(resolve(base_dir, j.at("registry_file").get<std::string>()));
    reg.profiles = loaded.profiles;
  }
  if (j.contains("profiles")) {
    reg.profiles.clear();
    for (const auto& p : j.at("profiles")) {
      reg.profiles.push_back(
          {p.at("lambda_read").get<double>(), p.at("lambda_shot").get<double>(), p.value("label", "profile")});
    }
  }
  if (j.contains("stored_probability")) {
    reg.stored_probability = j.at("stored_probability").get<double>();
  }
  if (j.contains("shot_range")) {
    reg.shot_range = range_from(j.at("shot_range"));
  }
  if (j.contains("read_range")) {
    reg.read_range = range_from(j.at("read_range"));
  }
}

}  // namespace

std::string config_to_string(const DegradationConfig& cfg) {
  json entries = json::array();
  for (const auto& e : cfg.kernel_pool.entries) {
    json je = {{"kind", to_string(e.kind)}, {"weight", e.weight}};
    if (!e.psfs.empty()) {
      json kernels = json::array();
      for (const auto& k : e.psfs) {
        kernels.push_back({{"source", k.params.source}, {"size", k.size}, {"weights", k.weights}});
      }
      je["kernels"] = kernels;
    }
    entries.push_back(je);
  }
  const auto& r = cfg.kernel_pool.ranges;
  json profiles = json::array();
  for (const auto& p : cfg.noise_registry.profiles) {
    profiles.push_back({{"label", p.label}, {"lambda_read", p.lambda_read}, {"lambda_shot", p.lambda_shot}});
  }
  const json j = {
      {"level", static_cast<int>(cfg.level)},
      {"master_seed", cfg.master_seed},
      {"kernel_pool",
       {{"count_probabilities", cfg.kernel_pool.count_probabilities},
        {"entries", entries},
        {"ranges",
         {{"size", {r.size_min, r.size_max}},
          {"sigma", {r.sigma_min, r.sigma_max}},
          {"theta_max", r.theta_max},
          {"disk_radius", {r.disk_radius_min, r.disk_radius_max}},
          {"motion_length", {r.motion_length_min, r.motion_length_max}},
          {"wiggle", {r.wiggle_min, r.wiggle_max}}}}}},
      {"noise",
       {{"profiles", profiles},
        {"stored_probability", cfg.noise_registry.stored_probability},
        {"shot_range", range_json(cfg.noise_registry.shot_range)},
        {"read_range", range_json(cfg.noise_registry.read_range)}}},
      {"exposure",
       {{"probability", cfg.exposure.probability}, {"gain_range", {cfg.exposure.gain_lo, cfg.exposure.gain_hi}}}},
      {"quantization",
       {{"probability", cfg.quantization.probability}, {"max_bits_drop", cfg.quantization.max_bits_drop}}},
      {"noise_before_blur_probability", cfg.noise_before_blur_probability},
  };
  return j.dump(2) + "\n";
}

DegradationConfig config_from_string(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    DegradationConfig cfg;
    if (j.contains("level")) {
      const int level = j.at("level").get<int>();
      if (level != 1 && level != 2) {
        throw ValidationError("config level must be 1 or 2");
      }
      cfg.level = static_cast<Level>(level);
    }
    if (j.contains("master_seed")) {
      cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
    }
    if (j.contains("kernel_pool")) {
      parse_pool(j.at("kernel_pool"), cfg.kernel_pool, base_dir);
    }
    if (j.contains("noise")) {
      parse_noise(j.at("noise"), cfg.noise_registry, base_dir);
    }
    if (j.contains("exposure")) {
      const json& e = j.at("exposure");
      cfg.exposure.probability = e.value("probability", cfg.exposure.probability);
      if (e.contains("gain_range")) {
        cfg.exposure.gain_lo = e.at("gain_range").at(0).get<double>();
        cfg.exposure.gain_hi = e.at("gain_range").at(1).get<double>();
      }
    }
    if (j.contains("quantization")) {
      const json& q = j.at("quantization");
      cfg.quantization.probability = q.value("probability", cfg.quantization.probability);
      cfg.quantization.max_bits_drop = q.value("max_bits_drop", cfg.quantization.max_bits_drop);
    }
    cfg.noise_before_blur_probability =
        j.value("noise_before_blur_probability", cfg.noise_before_blur_probability);
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config has a malformed field: ") + e.what());
  }
}

DegradationConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open config " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_string(buf.str(), path.parent_path());
}

}  // namespace rawdeg
