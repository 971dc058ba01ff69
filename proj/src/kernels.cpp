#include "rawdeg/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <sstream>

#include "rawdeg/error.hpp"

namespace rawdeg {

namespace {

constexpr double kSumTolerance = 1e-6;

struct KindName {
  KernelKind kind;
  std::string_view name;
};
constexpr std::array<KindName, 6> kKindNames{{
    {KernelKind::identity, "identity"},
    {KernelKind::iso_gaussian, "iso_gaussian"},
    {KernelKind::aniso_gaussian, "aniso_gaussian"},
    {KernelKind::disk, "disk"},
    {KernelKind::motion, "motion"},
    {KernelKind::measured_psf, "measured_psf"},
}};

void normalize_weights(std::vector<double>& w) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) {
    v /= total;
  }
}

// Integral of sqrt(r^2 - t^2) dt from 0 to x.
double half_chord_integral(double x, double r) {
  x = std::clamp(x, -r, r);
  return 0.5 * (x * std::sqrt(std::max(0.0, r * r - x * x)) + r * r * std::asin(x / r));
}

// Exact area of the disk |p| <= r inside the cell [x0, x1] x [y0, y1].
double cell_disk_area(double x0, double x1, double y0, double y1, double r) {
  const double a = std::max(x0, -r);
  const double b = std::min(x1, r);
  if (a >= b) {
    return 0.0;
  }
  std::vector<double> cuts{a, b};
  for (double y : {y0, y1}) {
    if (std::abs(y) <= r) {
      const double xb = std::sqrt(r * r - y * y);
      for (double c : {-xb, xb}) {
        if (c > a && c < b) {
          cuts.push_back(c);
        }
      }
    }
  }
  std::sort(cuts.begin(), cuts.end());
  double area = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double p = cuts[k];
    const double q = cuts[k + 1];
    if (q <= p) {
      continue;
    }
    const double mid = 0.5 * (p + q);
    const double s = std::sqrt(std::max(0.0, r * r - mid * mid));
    // Within [p, q] the overlap [max(y0, -s), min(y1, s)] keeps one closed form.
    const bool hi_is_chord = s < y1;
    const bool lo_is_chord = -s > y0;
    const double hi_mid = hi_is_chord ? s : y1;
    const double lo_mid = lo_is_chord ? -s : y0;
    if (hi_mid <= lo_mid) {
      continue;
    }
    const double chord = half_chord_integral(q, r) - half_chord_integral(p, r);
    const double hi = hi_is_chord ? chord : y1 * (q - p);
    const double lo = lo_is_chord ? -chord : y0 * (q - p);
    area += hi - lo;
  }
  return area;
}

// Removes zero-mass border rings, keeping the kernel centred and odd-sized.
void trim_zero_rings(int& size, std::vector<double>& w) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  while (size > 1) {
    double ring = 0.0;
    for (int i = 0; i < size; ++i) {
      ring += w[i] + w[static_cast<std::size_t>(size - 1) * size + i];
      if (i > 0 && i < size - 1) {
        ring += w[static_cast<std::size_t>(i) * size] + w[static_cast<std::size_t>(i) * size + size - 1];
      }
    }
    if (ring > 1e-12 * total) {
      break;
    }
    const int inner = size - 2;
    std::vector<double> trimmed(static_cast<std::size_t>(inner) * inner);
    for (int i = 0; i < inner; ++i) {
      for (int j = 0; j < inner; ++j) {
        trimmed[static_cast<std::size_t>(i) * inner + j] = w[static_cast<std::size_t>(i + 1) * size + j + 1];
      }
    }
    size = inner;
    w = std::move(trimmed);
  }
}

double read_real(std::istream& in, const std::string& source, std::size_t index) {
  std::string token;
  if (!(in >> token)) {
    throw FormatError(source + ": expected kernel weight #" + std::to_string(index) + ", found end of file");
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size() || !std::isfinite(v)) {
      throw std::invalid_argument(token);
    }
    return v;
  } catch (const std::exception&) {
    throw FormatError(source + ": kernel weight #" + std::to_string(index) + " '" + token + "' is not a finite real");
  }
}

}  // namespace

std::string_view to_string(KernelKind kind) {
  for (const auto& kn : kKindNames) {
    if (kn.kind == kind) {
      return kn.name;
    }
  }
  return "unknown";
}

KernelKind kernel_kind_from_string(std::string_view name) {
  for (const auto& kn : kKindNames) {
    if (kn.name == name) {
      return kn.kind;
    }
  }
  throw ValidationError("unknown kernel kind '" + std::string(name) + "'");
}

double Kernel::sum() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

void Kernel::validate() const {
  if (size < 1 || size % 2 == 0) {
    throw ValidationError("kernel size " + std::to_string(size) + " must be odd and >= 1");
  }
  if (weights.size() != static_cast<std::size_t>(size) * size) {
    throw ValidationError("kernel weight count does not match size^2");
  }
  if (std::any_of(weights.begin(), weights.end(), [](double v) { return !(v >= 0.0); })) {
    throw ValidationError("kernel has negative or NaN weights");
  }
  if (std::abs(sum() - 1.0) > kSumTolerance) {
    throw ValidationError("kernel weights sum to " + std::to_string(sum()) + ", not 1");
  }
}

Kernel identity_kernel() { return Kernel{}; }

Kernel gaussian_kernel(int size, double sigma_x, double sigma_y, double theta) {
  if (size < 1 || size % 2 == 0) {
    throw ParameterError("gaussian kernel size must be odd and positive");
  }
  if (!(sigma_x > 0.0) || !(sigma_y > 0.0)) {
    throw ParameterError("gaussian sigmas must be positive");
  }
  Kernel k;
  k.size = size;
  k.kind = sigma_x == sigma_y ? KernelKind::iso_gaussian : KernelKind::aniso_gaussian;
  k.params.size = size;
  k.params.sigma_x = sigma_x;
  k.params.sigma_y = sigma_y;
  k.params.theta = theta;
  k.weights.assign(static_cast<std::size_t>(size) * size, 0.0);

  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const int half = size / 2;
  for (int row = 0; row < size; ++row) {
    for (int col = 0; col < size; ++col) {
      const double u = col - half;  // x offset
      const double v = row - half;  // y offset
      const double along = (c * u + s * v) / sigma_x;
      const double across = (-s * u + c * v) / sigma_y;
      k.weights[static_cast<std::size_t>(row) * size + col] = std::exp(-0.5 * (along * along + across * across));
    }
  }
  normalize_weights(k.weights);

  const int needed = 2 * static_cast<int>(std::ceil(3.0 * std::max(sigma_x, sigma_y))) + 1;
  if (size < needed) {
    k.warnings.push_back("gaussian size " + std::to_string(size) + " truncates 3-sigma support (needs " +
                         std::to_string(needed) + ")");
  }
  return k;
}

Kernel disk_kernel(double radius) {
  if (!(radius > 0.0)) {
    throw ParameterError("disk radius must be positive");
  }
  int size = 2 * static_cast<int>(std::ceil(radius)) + 1;
  const int half = size / 2;
  std::vector<double> w(static_cast<std::size_t>(size) * size);
  for (int row = 0; row < size; ++row) {
    for (int col = 0; col < size; ++col) {
      const double x = col - half;
      const double y = row - half;
      w[static_cast<std::size_t>(row) * size + col] = cell_disk_area(x - 0.5, x + 0.5, y - 0.5, y + 0.5, radius);
    }
  }
  trim_zero_rings(size, w);
  normalize_weights(w);
  Kernel k;
  k.size = size;
  k.weights = std::move(w);
  k.kind = KernelKind::disk;
  k.params.size = size;
  k.params.radius = radius;
  return k;
}

Kernel motion_kernel(double length, double angle, double wiggle, Rng& rng) {
  return motion_kernel_from_seed(length, angle, wiggle, rng.next());
}

Kernel motion_kernel_from_seed(double length, double angle, double wiggle, std::uint64_t trajectory_seed) {
  if (!(length >= 1.0)) {
    throw ParameterError("motion length must be >= 1");
  }
  if (!(wiggle >= 0.0)) {
    throw ParameterError("motion wiggle must be >= 0");
  }
  Kernel k;
  k.kind = KernelKind::motion;
  k.params.length = length;
  k.params.angle = angle;
  k.params.wiggle = wiggle;
  k.params.trajectory_seed = trajectory_seed;

  // A blur of `length` pixels moves the footprint by length - 1.
  const double arc = length - 1.0;
  if (arc <= 0.0) {
    return k;
  }
  const int segments = std::max(1, static_cast<int>(std::ceil(arc)));
  const double step = arc / segments;

  // Zero-mean random walk of heading deviations around `angle`.
  Rng rng(trajectory_seed);
  std::vector<double> deviation(segments);
  double acc = 0.0;
  for (double& d : deviation) {
    acc += wiggle * rng.normal();
    d = acc;
  }
  const double mean_dev = std::accumulate(deviation.begin(), deviation.end(), 0.0) / segments;

  std::vector<double> xs{0.0}, ys{0.0};
  for (int s = 0; s < segments; ++s) {
    const double heading = angle + (deviation[s] - mean_dev);
    xs.push_back(xs.back() + step * std::cos(heading));
    ys.push_back(ys.back() + step * std::sin(heading));
  }
  const auto [xmin, xmax] = std::minmax_element(xs.begin(), xs.end());
  const auto [ymin, ymax] = std::minmax_element(ys.begin(), ys.end());
  const double cx = 0.5 * (*xmin + *xmax);
  const double cy = 0.5 * (*ymin + *ymax);
  double extent = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] -= cx;
    ys[i] -= cy;
    extent = std::max({extent, std::abs(xs[i]), std::abs(ys[i])});
  }
  const int half = static_cast<int>(std::ceil(extent));
  const int size = 2 * half + 1;
  std::vector<double> w(static_cast<std::size_t>(size) * size, 0.0);

  constexpr int kSubsteps = 8;
  for (int s = 0; s < segments; ++s) {
    for (int t = 0; t < kSubsteps; ++t) {
      const double f = (t + 0.5) / kSubsteps;
      const double x = xs[s] + f * (xs[s + 1] - xs[s]) + half;
      const double y = ys[s] + f * (ys[s + 1] - ys[s]) + half;
      const int c0 = static_cast<int>(std::floor(x));
      const int r0 = static_cast<int>(std::floor(y));
      const double fx = x - c0;
      const double fy = y - r0;
      const double mass = step / kSubsteps;
      const std::array<std::tuple<int, int, double>, 4> taps{{
          {r0, c0, (1 - fy) * (1 - fx)},
          {r0, c0 + 1, (1 - fy) * fx},
          {r0 + 1, c0, fy * (1 - fx)},
          {r0 + 1, c0 + 1, fy * fx},
      }};
      for (const auto& [r, c, bw] : taps) {
        if (bw > 0.0 && r >= 0 && r < size && c >= 0 && c < size) {
          w[static_cast<std::size_t>(r) * size + c] += mass * bw;
        }
      }
    }
  }
  normalize_weights(w);
  k.size = size;
  k.params.size = size;
  k.weights = std::move(w);
  return k;
}

Kernel kernel_from_weights(int size, std::vector<double> weights, KernelKind kind, KernelParams params) {
  if (size < 1 || size % 2 == 0) {
    throw ValidationError("kernel size " + std::to_string(size) + " must be odd and >= 1");
  }
  if (weights.size() != static_cast<std::size_t>(size) * size) {
    throw ValidationError("kernel needs " + std::to_string(size * size) + " weights, got " +
                          std::to_string(weights.size()));
  }
  for (double& v : weights) {
    if (!std::isfinite(v)) {
      throw ValidationError("kernel weight is not finite");
    }
    v = std::max(v, 0.0);
  }
  if (std::accumulate(weights.begin(), weights.end(), 0.0) <= 0.0) {
    throw ValidationError("kernel is all zero after clamping negative weights");
  }
  normalize_weights(weights);
  Kernel k;
  k.size = size;
  k.weights = std::move(weights);
  k.kind = kind;
  k.params = std::move(params);
  k.params.size = size;
  return k;
}

Kernel parse_psf(std::istream& in, const std::string& source) {
  std::string magic;
  if (!(in >> magic) || magic != "RAWKERN") {
    throw FormatError(source + ": missing RAWKERN header");
  }
  long long size = 0;
  if (!(in >> size) || size < 1 || size % 2 == 0 || size > 1001) {
    throw FormatError(source + ": kernel size must be an odd integer in [1, 1001]");
  }
  std::vector<double> weights(static_cast<std::size_t>(size * size));
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] = read_real(in, source, i);
  }
  std::string extra;
  if (in >> extra) {
    throw FormatError(source + ": trailing data after " + std::to_string(weights.size()) + " weights");
  }
  KernelParams params;
  params.source = source;
  return kernel_from_weights(static_cast<int>(size), std::move(weights), KernelKind::measured_psf, params);
}

Kernel load_psf(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open kernel file " + path.string());
  }
  return parse_psf(in, path.string());
}

void write_psf(const Kernel& kernel, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write kernel file " + path.string());
  }
  out << "RAWKERN " << kernel.size << '\n' << std::setprecision(17);
  for (int r = 0; r < kernel.size; ++r) {
    for (int c = 0; c < kernel.size; ++c) {
      out << (c ? " " : "") << kernel(r, c);
    }
    out << '\n';
  }
}

Kernel regenerate_kernel(KernelKind kind, const KernelParams& params, const std::vector<double>& weights) {
  switch (kind) {
    case KernelKind::identity:
      return identity_kernel();
    case KernelKind::iso_gaussian:
    case KernelKind::aniso_gaussian: {
      Kernel k = gaussian_kernel(params.size, params.sigma_x, params.sigma_y, params.theta);
      k.kind = kind;
      return k;
    }
    case KernelKind::disk:
      return disk_kernel(params.radius);
    case KernelKind::motion:
      return motion_kernel_from_seed(params.length, params.angle, params.wiggle, params.trajectory_seed);
    case KernelKind::measured_psf:
      return kernel_from_weights(params.size, weights, KernelKind::measured_psf, params);
  }
  throw ValidationError("unknown kernel kind");
}

Kernel compose(const Kernel& first, const Kernel& second) {
  const int size = first.size + second.size - 1;
  std::vector<double> w(static_cast<std::size_t>(size) * size, 0.0);
  for (int a = 0; a < first.size; ++a) {
    for (int b = 0; b < first.size; ++b) {
      const double fa = first(a, b);
      for (int c = 0; c < second.size; ++c) {
        for (int d = 0; d < second.size; ++d) {
          w[static_cast<std::size_t>(a + c) * size + (b + d)] += fa * second(c, d);
        }
      }
    }
  }
  KernelParams params;
  params.source = "compose(" + std::string(to_string(first.kind)) + "," + std::string(to_string(second.kind)) + ")";
  return kernel_from_weights(size, std::move(w), KernelKind::measured_psf, params);
}

void KernelPool::validate() const {
  if (entries.empty()) {
    throw ValidationError("kernel pool is empty");
  }
  double total = 0.0;
  for (const auto& e : entries) {
    if (!(e.weight >= 0.0)) {
      throw ValidationError("kernel pool weight must be non-negative");
    }
    if (e.kind == KernelKind::measured_psf && e.psfs.empty()) {
      throw ValidationError("measured_psf pool entry has no kernels");
    }
    total += e.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ValidationError("kernel pool weights sum to " + std::to_string(total) + ", not 1");
  }
  double count_total = 0.0;
  for (double p : count_probabilities) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ValidationError("kernel count probabilities must lie in [0, 1]");
    }
    count_total += p;
  }
  if (std::abs(count_total - 1.0) > 1e-9) {
    throw ValidationError("kernel count probabilities must sum to 1");
  }
  const auto& r = ranges;
  if (r.size_min < 1 || r.size_min % 2 == 0 || r.size_max % 2 == 0 || r.size_max < r.size_min) {
    throw ValidationError("kernel size range must be odd bounds with min <= max");
  }
  if (!(r.sigma_min > 0.0 && r.sigma_max >= r.sigma_min)) {
    throw ValidationError("sigma range must satisfy 0 < min <= max");
  }
  if (!(r.disk_radius_min > 0.0 && r.disk_radius_max >= r.disk_radius_min)) {
    throw ValidationError("disk radius range must satisfy 0 < min <= max");
  }
  if (!(r.motion_length_min >= 1.0 && r.motion_length_max >= r.motion_length_min)) {
    throw ValidationError("motion length range must satisfy 1 <= min <= max");
  }
  if (!(r.wiggle_min >= 0.0 && r.wiggle_max >= r.wiggle_min)) {
    throw ValidationError("wiggle range must satisfy 0 <= min <= max");
  }
}

KernelPool KernelPool::defaults() {
  KernelPool pool;
  pool.entries = {
      {KernelKind::iso_gaussian, 0.3, {}},
      {KernelKind::aniso_gaussian, 0.3, {}},
      {KernelKind::disk, 0.2, {}},
      {KernelKind::motion, 0.2, {}},
  };
  return pool;
}

KernelPool KernelPool::identity_only() {
  KernelPool pool;
  pool.entries = {{KernelKind::identity, 1.0, {}}};
  return pool;
}

int sample_kernel_count(const KernelPool& pool, Rng& rng) {
  const double u = rng.uniform();
  const auto& p = pool.count_probabilities;
  if (u < p[0]) {
    return 0;
  }
  return u < p[0] + p[1] ? 1 : 2;
}

Kernel sample_kernel(const KernelPool& pool, Rng& rng) {
  const double u = rng.uniform();
  const KernelPoolEntry* chosen = &pool.entries.back();
  double cumulative = 0.0;
  for (const auto& e : pool.entries) {
    cumulative += e.weight;
    if (u < cumulative) {
      chosen = &e;
      break;
    }
  }
  const auto& r = pool.ranges;
  auto draw_size = [&] { return r.size_min + 2 * rng.uniform_int(0, (r.size_max - r.size_min) / 2); };
  switch (chosen->kind) {
    case KernelKind::identity:
      return identity_kernel();
    case KernelKind::iso_gaussian: {
      const int size = draw_size();
      const double sigma = rng.uniform(r.sigma_min, r.sigma_max);
      Kernel k = gaussian_kernel(size, sigma, sigma, 0.0);
      k.kind = KernelKind::iso_gaussian;
      return k;
    }
    case KernelKind::aniso_gaussian: {
      const int size = draw_size();
      const double sx = rng.uniform(r.sigma_min, r.sigma_max);
      const double sy = rng.uniform(r.sigma_min, r.sigma_max);
      const double theta = rng.uniform(0.0, r.theta_max);
      Kernel k = gaussian_kernel(size, sx, sy, theta);
      k.kind = KernelKind::aniso_gaussian;
      return k;
    }
    case KernelKind::disk:
      return disk_kernel(rng.uniform(r.disk_radius_min, r.disk_radius_max));
    case KernelKind::motion: {
      const double length = rng.uniform(r.motion_length_min, r.motion_length_max);
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double wiggle = rng.uniform(r.wiggle_min, r.wiggle_max);
      return motion_kernel(length, angle, wiggle, rng);
    }
    case KernelKind::measured_psf: {
      const int idx = rng.uniform_int(0, static_cast<int>(chosen->psfs.size()) - 1);
      return chosen->psfs[idx];
    }
  }
  return identity_kernel();
}

std::vector<Kernel> sample_kernels(const KernelPool& pool, Rng& rng) {
  const int count = sample_kernel_count(pool, rng);
  std::vector<Kernel> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    out.push_back(sample_kernel(pool, rng));
  }
  return out;
}

}  // namespace rawdeg
