#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rawdeg/degrade.hpp"
#include "rawdeg/error.hpp"

namespace rawdeg {

using nlohmann::json;

namespace {

json kernel_to_json(const Kernel& k) {
  const auto& p = k.params;
  json params;
  switch (k.kind) {
    case KernelKind::identity:
      break;
    case KernelKind::iso_gaussian:
    case KernelKind::aniso_gaussian:
      params = {{"size", p.size}, {"sigma_x", p.sigma_x}, {"sigma_y", p.sigma_y}, {"theta", p.theta}};
      break;
    case KernelKind::disk:
      params = {{"radius", p.radius}};
      break;
    case KernelKind::motion:
      params = {{"length", p.length},
                {"angle", p.angle},
                {"wiggle", p.wiggle},
                {"trajectory_seed", p.trajectory_seed}};
      break;
    case KernelKind::measured_psf:
      params = {{"source", p.source}};
      break;
  }
  json j = {{"kind", to_string(k.kind)}, {"size", k.size}, {"params", params}};
  if (k.kind == KernelKind::measured_psf) {
    j["weights"] = k.weights;
  }
  return j;
}

Kernel kernel_from_json(const json& j) {
  const KernelKind kind = kernel_kind_from_string(j.at("kind").get<std::string>());
  const json& pj = j.at("params");
  KernelParams p;
  p.size = j.at("size").get<int>();
  std::vector<double> weights;
  switch (kind) {
    case KernelKind::identity:
      break;
    case KernelKind::iso_gaussian:
    case KernelKind::aniso_gaussian:
      p.size = pj.at("size").get<int>();
      p.sigma_x = pj.at("sigma_x").get<double>();
      p.sigma_y = pj.at("sigma_y").get<double>();
      p.theta = pj.at("theta").get<double>();
      break;
    case KernelKind::disk:
      p.radius = pj.at("radius").get<double>();
      break;
    case KernelKind::motion:
      p.length = pj.at("length").get<double>();
      p.angle = pj.at("angle").get<double>();
      p.wiggle = pj.at("wiggle").get<double>();
      p.trajectory_seed = pj.at("trajectory_seed").get<std::uint64_t>();
      break;
    case KernelKind::measured_psf:
      p.source = pj.value("source", std::string{});
      weights = j.at("weights").get<std::vector<double>>();
      break;
  }
  Kernel k = regenerate_kernel(kind, p, weights);
  if (k.size != j.at("size").get<int>()) {
    throw ReplayError("regenerated " + std::string(to_string(kind)) + " kernel has size " + std::to_string(k.size) +
                      ", record says " + std::to_string(j.at("size").get<int>()));
  }
  return k;
}

struct StageToJson {
  json operator()(const BlurStage& s) const { return {{"stage", "blur"}, {"kernel", kernel_to_json(s.kernel)}}; }
  json operator()(const NoiseStage& s) const {
    return {{"stage", "noise"},
            {"label", s.profile.label},
            {"lambda_read", s.profile.lambda_read},
            {"lambda_shot", s.profile.lambda_shot},
            {"field_seed", s.field_seed}};
  }
  json operator()(const ExposureStage& s) const { return {{"stage", "exposure"}, {"gain", s.gain}}; }
  json operator()(const QuantizeStage& s) const { return {{"stage", "requantize"}, {"target_bits", s.target_bits}}; }
  json operator()(const ClipStage&) const { return {{"stage", "clip"}}; }
};

Stage stage_from_json(const json& j) {
  const auto name = j.at("stage").get<std::string>();
  if (name == "blur") {
    return BlurStage{kernel_from_json(j.at("kernel"))};
  }
  if (name == "noise") {
    NoiseProfile p{j.at("lambda_read").get<double>(), j.at("lambda_shot").get<double>(), j.value("label", "")};
    return NoiseStage{p, j.at("field_seed").get<std::uint64_t>()};
  }
  if (name == "exposure") {
    return ExposureStage{j.at("gain").get<double>()};
  }
  if (name == "requantize") {
    return QuantizeStage{j.at("target_bits").get<int>()};
  }
  if (name == "clip") {
    return ClipStage{};
  }
  throw ReplayError("unknown stage '" + name + "' in record");
}

}  // namespace

std::string record_to_string(const DegradationRecord& record) {
  json stages = json::array();
  for (const Stage& s : record.stages) {
    stages.push_back(std::visit(StageToJson{}, s));
  }
  const json j = {
      {"record_version", record.record_version},
      {"level", static_cast<int>(record.level)},
      {"per_image_seed", record.per_image_seed},
      {"seed_mix", "splitmix64"},
      {"stage_count", record.stages.size()},
      {"stages", stages},
  };
  return j.dump(2) + "\n";
}

DegradationRecord record_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ReplayError(std::string("record is not valid structured text (truncated?): ") + e.what());
  }
  try {
    DegradationRecord record;
    record.record_version = j.at("record_version").get<int>();
    if (record.record_version != kRecordVersion) {
      throw ReplayError("record version " + std::to_string(record.record_version) + " is not supported");
    }
    const int level = j.at("level").get<int>();
    if (level != 1 && level != 2) {
      throw ReplayError("record level must be 1 or 2");
    }
    record.level = static_cast<Level>(level);
    record.per_image_seed = j.at("per_image_seed").get<std::uint64_t>();
    const auto& stages = j.at("stages");
    const auto expected = j.at("stage_count").get<std::size_t>();
    if (stages.size() != expected) {
      throw ReplayError("record lists " + std::to_string(stages.size()) + " stages but stage_count is " +
                        std::to_string(expected));
    }
    for (const auto& s : stages) {
      record.stages.push_back(stage_from_json(s));
    }
    if (record.stages.empty() || !std::holds_alternative<ClipStage>(record.stages.back())) {
      throw ReplayError("record is incomplete: the final clip stage is missing");
    }
    return record;
  } catch (const json::exception& e) {
    throw ReplayError(std::string("record is missing fields: ") + e.what());
  } catch (const ReplayError&) {
    throw;
  } catch (const Error& e) {
    throw ReplayError(std::string("record is inconsistent: ") + e.what());
  }
}

void write_record(const DegradationRecord& record, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write record " + path.string());
  }
  out << record_to_string(record);
  if (!out) {
    throw IoError("failed writing record " + path.string());
  }
}

DegradationRecord read_record(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open record " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return record_from_string(buf.str());
}

}  // namespace rawdeg
