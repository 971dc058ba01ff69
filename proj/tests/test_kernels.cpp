#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <numbers>
#include <sstream>

#include "rawdeg/error.hpp"
#include "rawdeg/kernels.hpp"
#include "rawdeg/reference.hpp"
#include "support/synthetic.hpp"

using namespace rawdeg;

namespace {

void check_valid(const Kernel& k) {
  CHECK(k.size % 2 == 1);
  CHECK(k.weights.size() == static_cast<std::size_t>(k.size) * k.size);
  for (double w : k.weights) {
    CHECK(w >= 0.0);
  }
  CHECK(std::abs(k.sum() - 1.0) <= 1e-6);
}

Kernel parse(const std::string& text) {
  std::istringstream in(text);
  return parse_psf(in, "fixture");
}

double max_abs_diff(const RawImage& a, const RawImage& b) {
  double m = 0.0;
  for (int c = 0; c < RawImage::kChannels; ++c) {
    for (std::size_t i = 0; i < a[c].size(); ++i) {
      m = std::max(m, std::abs(static_cast<double>(a[c].values()[i]) - b[c].values()[i]));
    }
  }
  return m;
}

}  // namespace

TEST_CASE("kernel kind names round trip") {
  for (auto kind : {KernelKind::identity, KernelKind::iso_gaussian, KernelKind::aniso_gaussian, KernelKind::disk,
                    KernelKind::motion, KernelKind::measured_psf}) {
    CHECK(kernel_kind_from_string(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(kernel_kind_from_string("box"), ValidationError);
}

TEST_CASE("gaussian kernel") {
  SUBCASE("near-zero sigma is a delta") {
    const Kernel k = gaussian_kernel(5, 1e-6, 1e-6, 0.3);
    check_valid(k);
    CHECK(k(2, 2) == doctest::Approx(1.0));
    CHECK(k(2, 3) < 1e-12);
  }
  SUBCASE("isotropic kernels ignore theta") {
    const Kernel a = gaussian_kernel(9, 1.3, 1.3, 0.0);
    const Kernel b = gaussian_kernel(9, 1.3, 1.3, 1.1);
    for (std::size_t i = 0; i < a.weights.size(); ++i) {
      CHECK(std::abs(a.weights[i] - b.weights[i]) < 1e-9);
    }
    CHECK(a.kind == KernelKind::iso_gaussian);
  }
  SUBCASE("matches dense bivariate normal evaluation") {
    const Kernel k = gaussian_kernel(11, 2.0, 0.5, 0.0);
    check_valid(k);
    CHECK(k.kind == KernelKind::aniso_gaussian);
    // Oracle: evaluate the density with the inverse covariance matrix directly.
    const double sxx = 4.0, syy = 0.25;
    double total = 0.0, grid[11][11];
    for (int r = 0; r < 11; ++r) {
      for (int c = 0; c < 11; ++c) {
        const double dx = c - 5, dy = r - 5;
        grid[r][c] = std::exp(-0.5 * (dx * dx / sxx + dy * dy / syy)) / (2 * std::numbers::pi * std::sqrt(sxx * syy));
        total += grid[r][c];
      }
    }
    for (int r = 0; r < 11; ++r) {
      for (int c = 0; c < 11; ++c) {
        CHECK(k(r, c) == doctest::Approx(grid[r][c] / total).epsilon(1e-12));
      }
    }
  }
  SUBCASE("rotation by a quarter turn transposes") {
    const Kernel a = gaussian_kernel(9, 2.0, 0.7, 0.0);
    const Kernel b = gaussian_kernel(9, 2.0, 0.7, std::numbers::pi / 2);
    for (int r = 0; r < 9; ++r) {
      for (int c = 0; c < 9; ++c) {
        CHECK(b(r, c) == doctest::Approx(a(c, r)).epsilon(1e-9));
      }
    }
  }
  SUBCASE("rotated covariance oracle") {
    const double sx = 2.5, sy = 0.8, th = 0.6;
    const Kernel k = gaussian_kernel(13, sx, sy, th);
    // Sigma = R diag(sx^2, sy^2) R^T, evaluate d^T Sigma^-1 d through the explicit inverse.
    const double c = std::cos(th), s = std::sin(th);
    const double a11 = c * c * sx * sx + s * s * sy * sy;
    const double a12 = c * s * (sx * sx - sy * sy);
    const double a22 = s * s * sx * sx + c * c * sy * sy;
    const double det = a11 * a22 - a12 * a12;
    double total = 0.0;
    std::vector<double> dense;
    for (int r = 0; r < 13; ++r) {
      for (int col = 0; col < 13; ++col) {
        const double x = col - 6, y = r - 6;
        const double q = (a22 * x * x - 2 * a12 * x * y + a11 * y * y) / det;
        dense.push_back(std::exp(-0.5 * q));
        total += dense.back();
      }
    }
    for (std::size_t i = 0; i < dense.size(); ++i) {
      CHECK(k.weights[i] == doctest::Approx(dense[i] / total).epsilon(1e-10));
    }
  }
  SUBCASE("truncated support warns") {
    CHECK(gaussian_kernel(5, 3.0, 3.0, 0.0).warnings.size() == 1);
    CHECK(gaussian_kernel(19, 3.0, 3.0, 0.0).warnings.empty());
  }
  CHECK_THROWS_AS(gaussian_kernel(5, 0.0, 1.0, 0.0), ParameterError);
  CHECK_THROWS_AS(gaussian_kernel(4, 1.0, 1.0, 0.0), ParameterError);
}

TEST_CASE("disk kernel") {
  SUBCASE("radius 0.5 is the identity") {
    const Kernel k = disk_kernel(0.5);
    CHECK(k.size == 1);
    CHECK(k.weights[0] == 1.0);
  }
  SUBCASE("interior weights of radius 3 are equal") {
    const Kernel k = disk_kernel(3.0);
    check_valid(k);
    CHECK(k.size == 7);
    const double inner = k(3, 3);
    for (int r = 0; r < 7; ++r) {
      for (int c = 0; c < 7; ++c) {
        const double fx = std::abs(c - 3) + 0.5, fy = std::abs(r - 3) + 0.5;
        if (fx * fx + fy * fy <= 9.0) {
          CHECK(k(r, c) == doctest::Approx(inner).epsilon(1e-12));
        }
      }
    }
  }
  SUBCASE("radius 2.5 matches Monte-Carlo area fractions") {
    const Kernel k = disk_kernel(2.5);
    check_valid(k);
    // The nominal 7x7 support has an outer ring the disk only touches at four points.
    REQUIRE(k.size == 5);
    const int n = k.size, half = n / 2;
    Rng rng(17);
    const int samples = 100000;
    std::vector<double> area(n * n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        int hit = 0;
        for (int s = 0; s < samples; ++s) {
          const double x = c - half + rng.uniform(-0.5, 0.5), y = r - half + rng.uniform(-0.5, 0.5);
          hit += (x * x + y * y <= 6.25) ? 1 : 0;
        }
        area[r * n + c] = static_cast<double>(hit) / samples;
      }
    }
    const double total = std::accumulate(area.begin(), area.end(), 0.0);
    CHECK(total == doctest::Approx(std::numbers::pi * 6.25).epsilon(1e-2));
    for (int i = 0; i < n * n; ++i) {
      CHECK(std::abs(k.weights[i] - area[i] / total) < 1e-2);
      CHECK(std::abs(k.weights[i] * std::numbers::pi * 6.25 - area[i]) < 1e-2);
    }
  }
  SUBCASE("area fractions match fine-grid integration, tangent radii included") {
    for (double radius : {1.0, 1.5, 2.0, 3.3, 4.5}) {
      const Kernel k = disk_kernel(radius);
      const int n = k.size, half = n / 2, m = 400;
      const double disk_area = std::numbers::pi * radius * radius;
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
          int hit = 0;
          for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
              const double x = c - half - 0.5 + (j + 0.5) / m, y = r - half - 0.5 + (i + 0.5) / m;
              hit += x * x + y * y <= radius * radius ? 1 : 0;
            }
          }
          CHECK(std::abs(k(r, c) * disk_area - static_cast<double>(hit) / (m * m)) < 2e-3);
        }
      }
    }
  }
  SUBCASE("size is 2 ceil(r) + 1 less empty outer rings") {
    CHECK(disk_kernel(1.2).size == 3);
    CHECK(disk_kernel(1.7).size == 5);
    CHECK(disk_kernel(6.0).size == 13);
  }
  CHECK_THROWS_AS(disk_kernel(0.0), ParameterError);
}

TEST_CASE("motion kernel") {
  Rng rng(4);
  SUBCASE("length 1 is a delta") {
    const Kernel k = motion_kernel(1.0, 0.7, 0.3, rng);
    CHECK(k.size == 1);
    CHECK(k.weights[0] == 1.0);
  }
  SUBCASE("straight horizontal line") {
    const Kernel k = motion_kernel(9.0, 0.0, 0.0, rng);
    check_valid(k);
    REQUIRE(k.size == 9);
    // Hat-function integral of a uniform segment [-4, 4]: half weight at each end.
    for (int r = 0; r < 9; ++r) {
      for (int c = 0; c < 9; ++c) {
        const double expect = r != 4 ? 0.0 : ((c == 0 || c == 8) ? 1.0 / 16 : 1.0 / 8);
        CHECK(k(r, c) == doctest::Approx(expect).epsilon(1e-12));
      }
    }
  }
  SUBCASE("vertical line at a quarter turn") {
    const Kernel k = motion_kernel(5.0, std::numbers::pi / 2, 0.0, rng);
    check_valid(k);
    for (int r = 0; r < k.size; ++r) {
      for (int c = 0; c < k.size; ++c) {
        if (c != k.size / 2) {
          CHECK(k(r, c) < 1e-12);
        }
      }
    }
  }
  SUBCASE("random trajectories are valid and reproducible") {
    for (int i = 0; i < 50; ++i) {
      const double len = rng.uniform(1, 21), ang = rng.uniform(0, 6.28), wig = rng.uniform(0, 0.5);
      const Kernel k = motion_kernel(len, ang, wig, rng);
      check_valid(k);
      CHECK(k.size <= 2 * static_cast<int>(std::ceil(len)) + 1);
      const Kernel again = motion_kernel_from_seed(len, ang, wig, k.params.trajectory_seed);
      CHECK(again.weights == k.weights);
    }
  }
  CHECK_THROWS_AS(motion_kernel(0.5, 0, 0, rng), ParameterError);
}

TEST_CASE("measured PSF files") {
  SUBCASE("1x1 identity") {
    const Kernel k = parse("RAWKERN 1\n1.0\n");
    CHECK(k.size == 1);
    CHECK(k.weights[0] == 1.0);
    CHECK(k.kind == KernelKind::measured_psf);
  }
  SUBCASE("renormalizes") {
    const Kernel k = parse("RAWKERN 3\n0 0.1 0\n0.1 0.58 0.1\n0 0.1 0\n");
    CHECK(std::abs(k.sum() - 1.0) < 1e-6);
    CHECK(k(1, 1) == doctest::Approx(0.58 / 0.98));
  }
  SUBCASE("negative entry clamped then renormalized") {
    const Kernel k = parse("RAWKERN 3\n0.1 0.1 0.1\n0.1 0.2 0.1\n0.1 0.1 -0.01\n");
    check_valid(k);
    CHECK(k(2, 2) == 0.0);
    CHECK(k(1, 1) == doctest::Approx(0.2 / 0.9).epsilon(1e-12));
    CHECK(k(0, 0) == doctest::Approx(0.1 / 0.9).epsilon(1e-12));
  }
  CHECK_THROWS_AS(parse("RAWKERN 3\n0 0 0\n0 -1 0\n0 0 0\n"), ValidationError);
  CHECK_THROWS_AS(parse("KERNEL 1\n1\n"), FormatError);
  CHECK_THROWS_AS(parse("RAWKERN 2\n1 1 1 1\n"), FormatError);
  CHECK_THROWS_AS(parse("RAWKERN 3\n1 1 1\n"), FormatError);
  CHECK_THROWS_AS(parse("RAWKERN 1\n1 2\n"), FormatError);
  CHECK_THROWS_AS(parse("RAWKERN 1\nnan\n"), FormatError);
  CHECK_THROWS_AS(load_psf("/nonexistent/kernel.txt"), IoError);

  SUBCASE("file round trip") {
    const auto dir = testing::scratch_dir("psf");
    const Kernel k = gaussian_kernel(7, 1.5, 0.6, 0.4);
    write_psf(k, dir / "k.txt");
    const Kernel back = load_psf(dir / "k.txt");
    REQUIRE(back.size == 7);
    for (std::size_t i = 0; i < k.weights.size(); ++i) {
      CHECK(back.weights[i] == doctest::Approx(k.weights[i]).epsilon(1e-14));
    }
  }
}

TEST_CASE("regenerate_kernel reproduces generated kernels") {
  Rng rng(21);
  const KernelPool pool = KernelPool::defaults();
  for (int i = 0; i < 40; ++i) {
    const Kernel k = sample_kernel(pool, rng);
    const Kernel r = regenerate_kernel(k.kind, k.params, k.weights);
    CHECK(r.kind == k.kind);
    CHECK(r.size == k.size);
    CHECK(r.weights == k.weights);
  }
}

TEST_CASE("kernel sampling") {
  SUBCASE("identity pool") {
    Rng rng(1);
    for (int i = 0; i < 20; ++i) {
      for (const Kernel& k : sample_kernels(KernelPool::identity_only(), rng)) {
        CHECK(k.kind == KernelKind::identity);
        CHECK(k.size == 1);
      }
    }
  }
  SUBCASE("fixed seed gives a fixed sequence") {
    Rng a(77), b(77);
    for (int i = 0; i < 20; ++i) {
      const auto ka = sample_kernels(KernelPool::defaults(), a);
      const auto kb = sample_kernels(KernelPool::defaults(), b);
      REQUIRE(ka.size() == kb.size());
      for (std::size_t j = 0; j < ka.size(); ++j) {
        CHECK(ka[j].weights == kb[j].weights);
        CHECK(ka[j].params == kb[j].params);
      }
    }
  }
  SUBCASE("count frequencies within 3 sigma") {
    Rng rng(123);
    const int n = 10000;
    int counts[3] = {};
    const KernelPool pool = KernelPool::defaults();
    for (int i = 0; i < n; ++i) {
      ++counts[sample_kernel_count(pool, rng)];
    }
    for (int c = 0; c < 3; ++c) {
      const double p = pool.count_probabilities[c];
      CHECK(std::abs(counts[c] - n * p) <= 3 * std::sqrt(n * p * (1 - p)));
    }
  }
  SUBCASE("all kinds produce valid kernels in range") {
    Rng rng(9);
    KernelPool pool = KernelPool::defaults();
    pool.entries.push_back({KernelKind::measured_psf, 0.0, {parse("RAWKERN 3\n1 2 1\n2 4 2\n1 2 1\n")}});
    pool.entries[0].weight = 0.2;
    pool.entries.back().weight = 0.1;
    CHECK_NOTHROW(pool.validate());
    std::map<KernelKind, int> seen;
    for (int i = 0; i < 1000; ++i) {
      const Kernel k = sample_kernel(pool, rng);
      ++seen[k.kind];
      check_valid(k);
      if (k.kind == KernelKind::iso_gaussian || k.kind == KernelKind::aniso_gaussian) {
        CHECK(k.size >= 7);
        CHECK(k.size <= 21);
        CHECK(k.params.sigma_x >= 0.2);
        CHECK(k.params.sigma_x <= 4.0);
      }
      if (k.kind == KernelKind::iso_gaussian) {
        CHECK(k.params.sigma_x == k.params.sigma_y);
      }
    }
    CHECK(seen.size() == 5);
  }
}

TEST_CASE("kernel pool validation") {
  KernelPool pool = KernelPool::defaults();
  CHECK_NOTHROW(pool.validate());
  SUBCASE("weights must sum to one") {
    pool.entries[0].weight = 0.5;
    CHECK_THROWS_AS(pool.validate(), ValidationError);
  }
  SUBCASE("empty") {
    pool.entries.clear();
    CHECK_THROWS_AS(pool.validate(), ValidationError);
  }
  SUBCASE("psf entry without kernels") {
    pool.entries.push_back({KernelKind::measured_psf, 0.0, {}});
    CHECK_THROWS_AS(pool.validate(), ValidationError);
  }
  SUBCASE("count probabilities") {
    pool.count_probabilities = {0.5, 0.5, 0.5};
    CHECK_THROWS_AS(pool.validate(), ValidationError);
  }
}

TEST_CASE("compose is full convolution of kernel grids") {
  const Kernel a = parse("RAWKERN 3\n0 0 0\n0 0 1\n0 0 0\n");
  const Kernel b = parse("RAWKERN 3\n0 0 0\n0 0 0\n0 1 0\n");
  const Kernel ab = compose(a, b);
  check_valid(ab);
  REQUIRE(ab.size == 5);
  CHECK(ab(3, 3) == 1.0);
}

TEST_CASE("convolution oracles") {
  SUBCASE("impulse response is the flipped kernel") {
    Plane impulse(5, 5, 0.0f);
    impulse(2, 2) = 1.0f;
    const Kernel k = parse("RAWKERN 3\n1 2 3\n4 5 6\n7 8 9\n");
    const Plane out = convolve(impulse, k);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        CHECK(out(1 + r, 1 + c) == static_cast<float>(k(2 - r, 2 - c)));
      }
    }
  }
  SUBCASE("constant planes are preserved exactly") {
    Rng rng(8);
    for (int i = 0; i < 30; ++i) {
      const Kernel k = sample_kernel(KernelPool::defaults(), rng);
      const float value = static_cast<float>(rng.uniform());
      const Plane out = convolve(Plane(24, 24, value), k);
      for (float v : out.values()) {
        REQUIRE(v == value);
      }
    }
  }
  SUBCASE("identity and near-delta gaussian") {
    const RawImage img = testing::synthetic_patch(3, 32);
    CHECK(convolve(img, identity_kernel()) == img);
    CHECK(max_abs_diff(convolve(img, gaussian_kernel(5, 1e-6, 1e-6, 0.0)), img) < 1e-6);
  }
  SUBCASE("reflect-101 border") {
    Plane p(1, 4, 0.0f);
    p(0, 0) = 1.0f;
    p(0, 1) = 2.0f;
    p(0, 2) = 3.0f;
    p(0, 3) = 4.0f;
    const Kernel k = kernel_from_weights(3, {0, 0, 0, 1, 0, 0, 0, 0, 0}, KernelKind::measured_psf, {});
    // Correlation with a left tap reads x[j - 1]; column -1 reflects to column 1.
    Plane wide(3, 4);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) {
        wide(r, c) = p(0, c);
      }
    }
    const Plane out = convolve(wide, k);
    CHECK(out(1, 0) == 2.0f);
    CHECK(out(1, 1) == 1.0f);
    CHECK(out(1, 3) == 3.0f);
  }
  SUBCASE("mean preserved on periodic content") {
    const RawImage img = testing::synthetic_patch(12, 64);
    const RawImage out = convolve(img, gaussian_kernel(7, 1.0, 1.0, 0.0));
    for (int c = 0; c < 4; ++c) {
      double a = 0, b = 0;
      for (std::size_t i = 0; i < img[c].size(); ++i) {
        a += img[c].values()[i];
        b += out[c].values()[i];
      }
      CHECK(std::abs(a - b) / img[c].size() < 2e-3);
    }
  }
  SUBCASE("associativity away from borders") {
    const RawImage img = testing::synthetic_patch(5, 48);
    const Kernel k1 = gaussian_kernel(7, 1.8, 0.6, 0.5);
    Rng rng(2);
    const Kernel k2 = motion_kernel(6.0, 0.9, 0.2, rng);
    const RawImage two = convolve(convolve(img, k1), k2);
    const RawImage one = convolve(img, compose(k1, k2));
    const int margin = (k1.size + k2.size) / 2 + 1;
    for (int c = 0; c < 4; ++c) {
      for (int r = margin; r < 48 - margin; ++r) {
        for (int col = margin; col < 48 - margin; ++col) {
          CHECK(std::abs(two[c](r, col) - one[c](r, col)) < 1e-5);
        }
      }
    }
  }
  SUBCASE("kernel larger than the plane") {
    CHECK_THROWS_AS(convolve(Plane(5, 9), gaussian_kernel(7, 1, 1, 0)), DimensionError);
  }
}

TEST_CASE("parallel convolution is bit-identical to the serial reference") {
  const RawImage img = testing::synthetic_patch(31, 40);
  Rng rng(6);
  for (int i = 0; i < 15; ++i) {
    const Kernel k = sample_kernel(KernelPool::defaults(), rng);
    CHECK(convolve(img, k) == reference::convolve(img, k));
  }
}
