#include "rawdeg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

#include "rawdeg/dataset_io.hpp"
#include "rawdeg/error.hpp"

namespace rawdeg {

namespace {

void check_same_shape(const RawImage& a, const RawImage& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw DimensionError("image dimensions differ: " + std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                         " vs " + std::to_string(b.height()) + "x" + std::to_string(b.width()));
  }
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) {
    s += x;
  }
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

double psnr(const RawImage& pred, const RawImage& gt) {
  check_same_shape(pred, gt);
  double sse = 0.0;
  for (int c = 0; c < RawImage::kChannels; ++c) {
    const int h = pred.height();
    std::vector<double> partial(h, 0.0);
#pragma omp parallel for schedule(static)
    for (int r = 0; r < h; ++r) {
      const auto p = pred[c].row(r);
      const auto g = gt[c].row(r);
      double acc = 0.0;
      for (std::size_t j = 0; j < p.size(); ++j) {
        const double d = static_cast<double>(p[j]) - static_cast<double>(g[j]);
        acc += d * d;
      }
      partial[r] = acc;
    }
    for (double v : partial) {
      sse += v;
    }
  }
  const double mse = sse / static_cast<double>(pred.sample_count());
  if (mse == 0.0) {
    return kPsnrInfinity;
  }
  return 10.0 * std::log10(1.0 / mse);
}

std::vector<double> ssim_window_1d(const SsimParams& params) {
  std::vector<double> w(params.window);
  const int half = params.window / 2;
  double total = 0.0;
  for (int i = 0; i < params.window; ++i) {
    const double d = i - half;
    w[i] = std::exp(-(d * d) / (2.0 * params.sigma * params.sigma));
    total += w[i];
  }
  for (double& v : w) {
    v /= total;
  }
  return w;
}

double ssim_plane(const Plane& pred, const Plane& gt, const SsimParams& params) {
  if (pred.height() != gt.height() || pred.width() != gt.width()) {
    throw DimensionError("SSIM planes differ in size");
  }
  const int win = params.window;
  if (pred.height() < win || pred.width() < win) {
    throw DimensionError("plane " + std::to_string(pred.height()) + "x" + std::to_string(pred.width()) +
                         " is smaller than the " + std::to_string(win) + "x" + std::to_string(win) + " SSIM window");
  }
  const auto w = ssim_window_1d(params);
  const double c1 = std::pow(params.k1 * params.data_range, 2);
  const double c2 = std::pow(params.k2 * params.data_range, 2);
  const int h = pred.height();
  const int out_h = h - win + 1;
  const int out_w = pred.width() - win + 1;

  // Horizontal pass of x, y, x^2, y^2, xy over every input row.
  constexpr int kMoments = 5;
  std::vector<double> horiz(static_cast<std::size_t>(kMoments) * h * out_w);
  auto at = [&](int m, int r, int c) -> double& {
    return horiz[(static_cast<std::size_t>(m) * h + r) * out_w + c];
  };
#pragma omp parallel for schedule(static)
  for (int r = 0; r < h; ++r) {
    const auto x = pred.row(r);
    const auto y = gt.row(r);
    for (int c = 0; c < out_w; ++c) {
      double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      for (int k = 0; k < win; ++k) {
        const double a = x[c + k];
        const double b = y[c + k];
        sx += w[k] * a;
        sy += w[k] * b;
        sxx += w[k] * (a * a);
        syy += w[k] * (b * b);
        sxy += w[k] * (a * b);
      }
      at(0, r, c) = sx;
      at(1, r, c) = sy;
      at(2, r, c) = sxx;
      at(3, r, c) = syy;
      at(4, r, c) = sxy;
    }
  }

  std::vector<double> row_totals(out_h, 0.0);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < out_h; ++r) {
    double row_total = 0.0;
    for (int c = 0; c < out_w; ++c) {
      double m[kMoments] = {0, 0, 0, 0, 0};
      for (int k = 0; k < win; ++k) {
        for (int q = 0; q < kMoments; ++q) {
          m[q] += w[k] * at(q, r + k, c);
        }
      }
      const double mx = m[0], my = m[1];
      const double vx = m[2] - mx * mx;
      const double vy = m[3] - my * my;
      const double cov = m[4] - mx * my;
      row_total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
    row_totals[r] = row_total;
  }
  double total = 0.0;
  for (double v : row_totals) {
    total += v;
  }
  return total / (static_cast<double>(out_h) * out_w);
}

double ssim(const RawImage& pred, const RawImage& gt, const SsimParams& params) {
  check_same_shape(pred, gt);
  double sum = 0.0;
  for (int c = 0; c < RawImage::kChannels; ++c) {
    sum += ssim_plane(pred[c], gt[c], params);
  }
  return sum / RawImage::kChannels;
}

MetricReport evaluate_pairs(const std::vector<NamedImage>& preds, const std::vector<NamedImage>& gts) {
  std::map<std::string, const RawImage*> gt_by_id;
  for (const auto& g : gts) {
    gt_by_id[g.id] = &g.image;
  }
  std::map<std::string, const RawImage*> pred_by_id;
  for (const auto& p : preds) {
    pred_by_id[p.id] = &p.image;
  }

  MetricReport report;
  std::vector<std::pair<const RawImage*, const RawImage*>> pairs;
  for (const auto& [id, pred] : pred_by_id) {
    const auto it = gt_by_id.find(id);
    if (it == gt_by_id.end()) {
      report.skipped.push_back(id + ": no ground truth with this name");
      continue;
    }
    if (pred->height() != it->second->height() || pred->width() != it->second->width()) {
      report.skipped.push_back(id + ": dimension mismatch");
      continue;
    }
    report.rows.push_back({id, 0.0, 0.0});
    pairs.emplace_back(pred, it->second);
  }
  for (const auto& [id, gt] : gt_by_id) {
    if (!pred_by_id.contains(id)) {
      report.skipped.push_back(id + ": no prediction with this name");
    }
  }
  std::sort(report.skipped.begin(), report.skipped.end());

  for (std::size_t i = 0; i < pairs.size(); ++i) {
    report.rows[i].psnr_db = psnr(*pairs[i].first, *pairs[i].second);
    report.rows[i].ssim = ssim(*pairs[i].first, *pairs[i].second);
  }
  std::vector<double> p, s;
  for (const auto& row : report.rows) {
    p.push_back(row.psnr_db);
    s.push_back(row.ssim);
  }
  report.mean_psnr_db = mean_of(p);
  report.mean_ssim = mean_of(s);
  return report;
}

MetricReport evaluate_directories(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir) {
  auto load_dir = [](const std::filesystem::path& dir) {
    std::vector<NamedImage> out;
    for (const auto& path : list_image_files(dir)) {
      out.push_back({path.filename().string(), load_raw(path)});
    }
    return out;
  };
  return evaluate_pairs(load_dir(pred_dir), load_dir(gt_dir));
}

std::string format_psnr(double psnr_db) {
  if (std::isinf(psnr_db)) {
    return "inf";
  }
  std::ostringstream out;
  out << std::fixed << std::setprecision(4) << psnr_db;
  return out.str();
}

std::string format_report_table(const MetricReport& report) {
  std::ostringstream out;
  out << "id\tpsnr_db\tssim\n";
  for (const auto& row : report.rows) {
    out << row.id << '\t' << format_psnr(row.psnr_db) << '\t' << std::fixed << std::setprecision(6) << row.ssim
        << '\n';
  }
  out << "# mean\t" << format_psnr(report.mean_psnr_db) << '\t' << std::fixed << std::setprecision(6)
      << report.mean_ssim << "\tevaluated=" << report.evaluated() << "\tskipped=" << report.skipped.size() << '\n';
  return out.str();
}

std::string format_report_json(const MetricReport& report) {
  using nlohmann::json;
  auto psnr_json = [](double v) { return std::isinf(v) ? json("inf") : json(v); };
  json rows = json::array();
  for (const auto& row : report.rows) {
    rows.push_back({{"id", row.id}, {"psnr_db", psnr_json(row.psnr_db)}, {"ssim", row.ssim}});
  }
  const json j = {
      {"report_version", 1},
      {"domain", "packed RGGB, normalized [0, 1]"},
      {"psnr_infinity_sentinel", "inf"},
      {"rows", rows},
      {"mean_psnr_db", psnr_json(report.mean_psnr_db)},
      {"mean_ssim", report.mean_ssim},
      {"evaluated", report.evaluated()},
      {"skipped", report.skipped},
  };
  return j.dump(2) + "\n";
}

}  // namespace rawdeg
