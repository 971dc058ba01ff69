#pragma once

#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "rawdeg/raw_image.hpp"

namespace rawdeg {

/// PSNR of identical images. Serialized as the string "inf".
inline constexpr double kPsnrInfinity = std::numeric_limits<double>::infinity();

/// 10 log10(1 / MSE) over all four packed planes, peak fixed at 1.0.
double psnr(const RawImage& pred, const RawImage& gt);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

/// Normalized 1-D Gaussian taps of the SSIM window.
std::vector<double> ssim_window_1d(const SsimParams& params = {});

/// Single-scale SSIM of one plane: mean of the SSIM map over the valid
/// (window-fully-inside) region.
double ssim_plane(const Plane& pred, const Plane& gt, const SsimParams& params = {});

/// Mean of ssim_plane over the four packed planes, equal weights.
double ssim(const RawImage& pred, const RawImage& gt, const SsimParams& params = {});

struct MetricRow {
  std::string id;
  double psnr_db = 0.0;
  double ssim = 0.0;
};

struct MetricReport {
  std::vector<MetricRow> rows;  // sorted by id
  double mean_psnr_db = 0.0;
  double mean_ssim = 0.0;
  std::vector<std::string> skipped;  // "<id>: <reason>"
  std::size_t evaluated() const { return rows.size(); }
};

struct NamedImage {
  std::string id;
  RawImage image;
};

/// Pairs by id; unmatched or mismatched pairs are listed as skipped.
MetricReport evaluate_pairs(const std::vector<NamedImage>& preds, const std::vector<NamedImage>& gts);

/// Loads every container / PGM file in both directories and pairs by filename.
MetricReport evaluate_directories(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir);

/// Tab-separated table `id psnr_db ssim` plus a `# mean` summary line.
std::string format_report_table(const MetricReport& report);
std::string format_report_json(const MetricReport& report);

std::string format_psnr(double psnr_db);

}  // namespace rawdeg
