#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include <omp.h>

#include <CLI11.hpp>

#include "rawdeg/dataset_io.hpp"
#include "rawdeg/degrade.hpp"
#include "rawdeg/error.hpp"
#include "rawdeg/metrics.hpp"
#include "rawdeg/noise.hpp"

namespace rawdeg::cli {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config_path;
  std::uint64_t seed = kDefaultMasterSeed;
  int level = static_cast<int>(DegradationConfig::defaults().level);
  int threads = 0;
  bool overwrite = false;
  int verbosity = 0;
};

void add_pipeline_options(CLI::App& app, CommonOptions& o) {
  app.add_option("--config", o.config_path, "Degradation config (JSON); flags override it")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Master seed")->capture_default_str();
  app.add_option("--level", o.level, "Degradation level (1 or 2)")
      ->check(CLI::IsMember({1, 2}))
      ->capture_default_str();
}

void add_run_options(CLI::App& app, CommonOptions& o) {
  app.add_option("--threads", o.threads, "Worker threads (0 = OpenMP default)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_flag("--overwrite", o.overwrite, "Replace existing outputs");
  app.add_flag("-v,--verbose", o.verbosity, "Verbosity (-v, -vv)");
}

DegradationConfig merged_config(const CLI::App& app, const CommonOptions& o) {
  DegradationConfig cfg = o.config_path.empty() ? DegradationConfig::defaults() : load_config(o.config_path);
  if (o.config_path.empty() || app.count("--level") > 0) {
    cfg.level = static_cast<Level>(o.level);
  }
  if (o.config_path.empty() || app.count("--seed") > 0) {
    cfg.master_seed = o.seed;
  }
  cfg.validate();
  return cfg;
}

void apply_threads(const CommonOptions& o) {
  if (o.threads > 0) {
    omp_set_num_threads(o.threads);
  }
}

std::string describe_stage(const Stage& s) {
  std::ostringstream out;
  out << std::setprecision(6);
  out << stage_name(s);
  if (const auto* b = std::get_if<BlurStage>(&s)) {
    const auto& p = b->kernel.params;
    out << " kind=" << to_string(b->kernel.kind) << " size=" << b->kernel.size;
    switch (b->kernel.kind) {
      case KernelKind::iso_gaussian:
      case KernelKind::aniso_gaussian:
        out << " sigma_x=" << p.sigma_x << " sigma_y=" << p.sigma_y << " theta=" << p.theta;
        break;
      case KernelKind::disk:
        out << " radius=" << p.radius;
        break;
      case KernelKind::motion:
        out << " length=" << p.length << " angle=" << p.angle << " wiggle=" << p.wiggle;
        break;
      case KernelKind::measured_psf:
        out << " source=" << p.source;
        break;
      case KernelKind::identity:
        break;
    }
  } else if (const auto* n = std::get_if<NoiseStage>(&s)) {
    out << " profile=" << n->profile.label << " lambda_read=" << n->profile.lambda_read
        << " lambda_shot=" << n->profile.lambda_shot;
  } else if (const auto* e = std::get_if<ExposureStage>(&s)) {
    out << " gain=" << e->gain;
  } else if (const auto* q = std::get_if<QuantizeStage>(&s)) {
    out << " bits=" << q->target_bits;
  }
  return out.str();
}

std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      const auto listed = list_image_files(in);
      files.insert(files.end(), listed.begin(), listed.end());
    } else if (fs::exists(in)) {
      files.emplace_back(in);
    } else {
      throw IoError("input " + in + " does not exist");
    }
  }
  return files;
}

void refuse_existing(const fs::path& path, bool overwrite) {
  if (!overwrite && fs::exists(path)) {
    throw IoError(path.string() + " already exists; pass --overwrite to replace it");
  }
}

int cmd_degrade(const CLI::App& app, const CommonOptions& o, const std::vector<std::string>& inputs,
                const std::string& out_dir, std::ostream& out) {
  apply_threads(o);
  const DegradationConfig cfg = merged_config(app, o);
  out << "master_seed " << cfg.master_seed << "\n";
  if (o.verbosity >= 1) {
    out << "config " << config_to_string(cfg);
  }
  const auto files = expand_inputs(inputs);
  if (files.empty()) {
    throw ValidationError("no input images found");
  }
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < files.size(); ++i) {
    const fs::path& file = files[i];
    const fs::path image_out = fs::path(out_dir) / (file.stem().string() + ".rawir");
    const fs::path record_out = fs::path(out_dir) / (file.stem().string() + ".record.json");
    refuse_existing(image_out, o.overwrite);
    refuse_existing(record_out, o.overwrite);
    const MosaicImage mosaic = read_mosaic(file);
    const RawImage clean = pack_rggb(normalize(mosaic));
    const DegradeResult result = degrade(clean, cfg, stable_mix(cfg.master_seed, i));
    write_container(raw_to_mosaic(result.image, mosaic.black_level, mosaic.white_level), image_out);
    write_record(result.record, record_out);
    out << file.string() << " -> " << image_out.string() << "\n";
    if (o.verbosity >= 1) {
      for (const auto& s : result.record.stages) {
        out << "  " << describe_stage(s) << "\n";
      }
    }
  }
  return kOk;
}

int cmd_dataset_build(const CLI::App& app, const CommonOptions& o, const std::string& manifest_path,
                      const std::string& out_dir, int patch_size, std::optional<int> stride, std::ostream& out,
                      std::ostream& err) {
  apply_threads(o);
  const DegradationConfig cfg = merged_config(app, o);
  out << "master_seed " << cfg.master_seed << "\n";
  if (o.verbosity >= 1) {
    out << "config " << config_to_string(cfg);
  }
  const DatasetManifest manifest = read_manifest(manifest_path);
  BuildOptions options;
  options.out_dir = out_dir;
  options.patch_size = patch_size;
  options.stride = stride.value_or(patch_size);
  options.overwrite = o.overwrite;
  options.threads = o.threads;
  const BuildSummary summary = build_dataset(manifest, cfg, options);
  for (const auto& [split, by_device] : summary.counts) {
    for (const auto& [device, count] : by_device) {
      out << split << "\t" << device << "\t" << count << "\n";
    }
  }
  out << "total_patches\t" << summary.total_patches << "\n";
  for (const auto& s : summary.skipped) {
    err << "skipped: " << s << "\n";
  }
  return summary.skipped.empty() ? kOk : kPartial;
}

int cmd_bench(const std::string& pred_dir, const std::string& gt_dir, const std::string& report_path,
              const std::string& json_path, std::ostream& out, std::ostream& err) {
  const MetricReport report = evaluate_directories(pred_dir, gt_dir);
  if (report.rows.empty()) {
    for (const auto& s : report.skipped) {
      err << "unmatched: " << s << "\n";
    }
    throw ValidationError("no pairs to evaluate between " + pred_dir + " and " + gt_dir);
  }
  const std::string table = format_report_table(report);
  out << table;
  if (!report_path.empty()) {
    std::ofstream(report_path, std::ios::binary) << table;
  }
  if (!json_path.empty()) {
    std::ofstream(json_path, std::ios::binary) << format_report_json(report);
  }
  for (const auto& s : report.skipped) {
    err << "unmatched: " << s << "\n";
  }
  return report.skipped.empty() ? kOk : kPartial;
}

int cmd_preview(const CommonOptions& o, const std::string& input, const std::string& output, bool gamma,
                std::optional<int> black, std::optional<int> white, std::ostream& out) {
  refuse_existing(output, o.overwrite);
  const RawImage raw = pack_rggb(normalize(read_mosaic(input, black, white)));
  write_ppm(demosaic_bilinear(raw), output, gamma);
  out << input << " -> " << output << "\n";
  return kOk;
}

int cmd_estimate_noise(const std::vector<std::string>& inputs, const std::string& output, const std::string& label,
                       std::optional<int> black, std::optional<int> white, std::ostream& out, std::ostream& err) {
  const auto files = expand_inputs(inputs);
  if (files.size() < 3) {
    throw ValidationError("insufficient data: need at least 3 flat-field groups, got " +
                          std::to_string(files.size()));
  }
  std::vector<MeanVariance> points;
  for (const auto& f : files) {
    const NormalizedMosaic m = normalize(read_mosaic(f, black, white));
    const MeanVariance mv = patch_statistics(m.values.values());
    points.push_back(mv);
    out << f.string() << "\tmean=" << std::setprecision(8) << mv.mean << "\tvariance=" << mv.variance << "\n";
  }
  ProfileFit fit = estimate_profile(points);
  fit.profile.label = label;
  for (const auto& d : fit.diagnostics) {
    err << "warning: " << d << "\n";
  }
  out << std::setprecision(8) << "lambda_read " << fit.profile.lambda_read << "\nlambda_shot "
      << fit.profile.lambda_shot << "\n";
  const std::string line = format_registry_line(fit.profile);
  out << line << "\n";
  if (!output.empty()) {
    std::ofstream f(output, std::ios::binary | std::ios::app);
    if (!f || !(f << line << "\n")) {
      throw IoError("cannot write registry " + output);
    }
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthesize degraded RAW training pairs and benchmark RAW restoration"};
  app.name(args.empty() ? "rawdeg" : fs::path(args[0]).filename().string());
  app.require_subcommand(1, 1);

  // degrade
  CommonOptions degrade_opts;
  std::vector<std::string> degrade_inputs;
  std::string degrade_out;
  auto* degrade_cmd = app.add_subcommand("degrade", "Degrade RAW files (container or 16-bit PGM)");
  degrade_cmd->add_option("inputs", degrade_inputs, "Input files or directories")->required();
  degrade_cmd->add_option("-o,--output", degrade_out, "Output directory")->required();
  add_pipeline_options(*degrade_cmd, degrade_opts);
  add_run_options(*degrade_cmd, degrade_opts);

  // dataset build
  CommonOptions build_opts;
  std::string manifest_path, build_out;
  int patch_size = 248;
  std::optional<int> stride;
  auto* dataset_cmd = app.add_subcommand("dataset", "Paired dataset generation");
  dataset_cmd->require_subcommand(1, 1);
  auto* build_cmd = dataset_cmd->add_subcommand("build", "Build clean/degraded patch pairs from a manifest");
  build_cmd->add_option("--manifest", manifest_path, "Dataset manifest (JSON)")->required()->check(CLI::ExistingFile);
  build_cmd->add_option("-o,--output", build_out, "Output tree")->required();
  build_cmd->add_option("--patch-size", patch_size, "Patch side in packed pixels")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  build_cmd->add_option("--stride", stride, "Patch stride in packed pixels (default: patch size)")
      ->check(CLI::PositiveNumber);
  add_pipeline_options(*build_cmd, build_opts);
  add_run_options(*build_cmd, build_opts);

  // bench
  std::string pred_dir, gt_dir, report_path, json_path;
  CommonOptions bench_opts;
  auto* bench_cmd = app.add_subcommand("bench", "RAW-domain PSNR/SSIM of predictions against ground truth");
  bench_cmd->add_option("--pred-dir", pred_dir, "Predictions")->required();
  bench_cmd->add_option("--gt-dir", gt_dir, "Ground truth")->required();
  bench_cmd->add_option("--report", report_path, "Write the tab-separated table here");
  bench_cmd->add_option("--json", json_path, "Write the JSON report here");
  add_run_options(*bench_cmd, bench_opts);

  // preview
  CommonOptions preview_opts;
  std::string preview_in, preview_out;
  bool gamma = false;
  std::optional<int> preview_black, preview_white;
  auto* preview_cmd = app.add_subcommand("preview", "Bilinear-demosaic preview as 8-bit PPM");
  preview_cmd->add_option("input", preview_in, "RAW file")->required();
  preview_cmd->add_option("-o,--output", preview_out, "Output .ppm")->required();
  preview_cmd->add_flag("--gamma", gamma, "Apply 1/2.2 display gamma");
  preview_cmd->add_option("--black-level", preview_black, "Override black level");
  preview_cmd->add_option("--white-level", preview_white, "Override white level");
  add_run_options(*preview_cmd, preview_opts);

  // estimate-noise
  CommonOptions noise_opts;
  std::vector<std::string> flats;
  std::string registry_out;
  std::string label = "estimated";
  std::optional<int> noise_black, noise_white;
  auto* noise_cmd = app.add_subcommand("estimate-noise", "Fit (lambda_read, lambda_shot) from flat-field files");
  noise_cmd->add_option("flats", flats, "One flat-field file (or directory of files) per intensity level")
      ->required();
  noise_cmd->add_option("-o,--output", registry_out, "Append the fitted profile to this registry file");
  noise_cmd->add_option("--label", label, "Profile label")->capture_default_str();
  noise_cmd->add_option("--black-level", noise_black, "Override black level");
  noise_cmd->add_option("--white-level", noise_white, "Override white level");
  add_run_options(*noise_cmd, noise_opts);

  std::vector<std::string> argv_tail(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(argv_tail.begin(), argv_tail.end());
  try {
    app.parse(argv_tail);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    if (e.get_name() == "CallForHelp") {
      return kOk;
    }
    return kUsage;
  }

  try {
    if (*degrade_cmd) {
      return cmd_degrade(*degrade_cmd, degrade_opts, degrade_inputs, degrade_out, out);
    }
    if (*build_cmd) {
      return cmd_dataset_build(*build_cmd, build_opts, manifest_path, build_out, patch_size, stride, out, err);
    }
    if (*bench_cmd) {
      apply_threads(bench_opts);
      return cmd_bench(pred_dir, gt_dir, report_path, json_path, out, err);
    }
    if (*preview_cmd) {
      return cmd_preview(preview_opts, preview_in, preview_out, gamma, preview_black, preview_white, out);
    }
    if (*noise_cmd) {
      return cmd_estimate_noise(flats, registry_out, label, noise_black, noise_white, out, err);
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace rawdeg::cli
