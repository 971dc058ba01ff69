#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rawdeg/error.hpp"
#include "rawdeg/noise.hpp"
#include "rawdeg/reference.hpp"
#include "support/synthetic.hpp"

using namespace rawdeg;

namespace {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

Moments moments(const RawImage& img) {
  double s = 0.0, n = 0.0;
  for (const auto& p : img.planes) {
    for (float v : p.values()) {
      s += v;
      n += 1;
    }
  }
  const double mean = s / n;
  double ss = 0.0;
  for (const auto& p : img.planes) {
    for (float v : p.values()) {
      ss += (v - mean) * (v - mean);
    }
  }
  return {mean, ss / (n - 1)};
}

}  // namespace

TEST_CASE("clean profile is the identity") {
  const RawImage img = testing::synthetic_patch(1, 16);
  Rng rng(3);
  CHECK(add_shot_read_noise(img, NoiseProfile::clean(), rng) == img);
}

TEST_CASE("noise moments at a mid-grey level") {
  RawImage img(500, 500, 16, 0.5f);  // 10^6 samples
  const RawImage noisy = add_shot_read_noise_seeded(img, {1e-4, 1e-3, "t"}, 2024);
  const Moments m = moments(noisy);
  CHECK(std::abs(m.variance - 6.0e-4) / 6.0e-4 < 0.02);
  CHECK(std::abs(m.mean - 0.5) < 1e-4);
}

TEST_CASE("read-noise floor at zero intensity") {
  RawImage img(500, 500, 16, 0.0f);
  const RawImage noisy = add_shot_read_noise_seeded(img, {4e-4, 7e-3, "t"}, 5);
  const Moments m = moments(noisy);
  CHECK(std::abs(m.variance - 4e-4) / 4e-4 < 0.02);
  CHECK(std::abs(m.mean) < 3 * std::sqrt(4e-4 / 1e6));
  CHECK(*std::min_element(noisy[0].values().begin(), noisy[0].values().end()) < 0.0f);  // not clipped
}

TEST_CASE("variance is linear in intensity") {
  for (double x : {0.1, 0.3, 0.8}) {
    RawImage img(500, 500, 16, static_cast<float>(x));
    const Moments m = moments(add_shot_read_noise_seeded(img, {2e-5, 4e-3, "t"}, 77));
    const double expect = 2e-5 + 4e-3 * x;
    CHECK(std::abs(m.variance - expect) / expect < 0.02);
    CHECK(std::abs(m.mean - x) < 3 * std::sqrt(expect / 1e6));
  }
}

TEST_CASE("noise is deterministic and matches the serial reference") {
  const RawImage img = testing::synthetic_patch(4, 33);
  const NoiseProfile p{3e-5, 2e-3, "t"};
  const RawImage a = add_shot_read_noise_seeded(img, p, 11);
  CHECK(a == add_shot_read_noise_seeded(img, p, 11));
  CHECK(a == reference::add_shot_read_noise(img, p, 11));
  CHECK_FALSE(a == add_shot_read_noise_seeded(img, p, 12));
  Rng r1(8), r2(8);
  CHECK(add_shot_read_noise(img, p, r1) == add_shot_read_noise(img, p, r2));
}

TEST_CASE("profile validation") {
  CHECK_THROWS_AS(NoiseProfile({-1e-6, 0.0, "x"}).validate(), ValidationError);
  CHECK_THROWS_AS(NoiseProfile({0.0, std::nan(""), "x"}).validate(), ValidationError);
  ProfileRegistry r = ProfileRegistry::defaults();
  CHECK_NOTHROW(r.validate());
  SUBCASE("inverted range") {
    r.shot_range = LogRange{1e-2, 1e-4};
    CHECK_THROWS_AS(r.validate(), ValidationError);
  }
  SUBCASE("only one range") {
    r.read_range.reset();
    CHECK_THROWS_AS(r.validate(), ValidationError);
  }
  SUBCASE("empty") {
    r.profiles.clear();
    CHECK_THROWS_AS(r.validate(), ValidationError);
  }
}

TEST_CASE("default registry spans smartphone-class ranges") {
  const ProfileRegistry r = ProfileRegistry::defaults();
  CHECK(r.profiles.size() == 6);
  for (const auto& p : r.profiles) {
    CHECK(p.lambda_shot >= 1e-4);
    CHECK(p.lambda_shot <= 1e-2);
    CHECK(p.lambda_read >= 1e-6);
    CHECK(p.lambda_read <= 1e-4);
  }
}

TEST_CASE("sample_profile") {
  SUBCASE("single profile") {
    ProfileRegistry r;
    r.profiles = {{1e-5, 1e-3, "only"}};
    Rng rng(1);
    for (int i = 0; i < 10; ++i) {
      CHECK(sample_profile(r, rng) == r.profiles[0]);
    }
  }
  SUBCASE("fixed seed sequence") {
    Rng a(5), b(5);
    for (int i = 0; i < 50; ++i) {
      CHECK(sample_profile(ProfileRegistry::defaults(), a) == sample_profile(ProfileRegistry::defaults(), b));
    }
  }
  SUBCASE("log-uniform median") {
    ProfileRegistry r = ProfileRegistry::defaults();
    r.stored_probability = 0.0;
    Rng rng(99);
    std::vector<double> logs;
    for (int i = 0; i < 10000; ++i) {
      const NoiseProfile p = sample_profile(r, rng);
      CHECK(p.lambda_shot >= 1e-4);
      CHECK(p.lambda_shot <= 1e-2);
      logs.push_back(std::log(p.lambda_shot));
    }
    std::nth_element(logs.begin(), logs.begin() + 5000, logs.end());
    const double mid = 0.5 * (std::log(1e-4) + std::log(1e-2));
    CHECK(std::abs(logs[5000] - mid) / std::abs(mid) < 0.05);
  }
}

TEST_CASE("estimate_profile") {
  SUBCASE("exact line") {
    std::vector<MeanVariance> pts;
    for (double m : {0.05, 0.2, 0.4, 0.7, 0.9}) {
      pts.push_back({m, 2e-4 + 5e-3 * m});
    }
    const ProfileFit fit = estimate_profile(pts);
    CHECK(std::abs(fit.profile.lambda_read - 2e-4) < 1e-9);
    CHECK(std::abs(fit.profile.lambda_shot - 5e-3) < 1e-9);
    CHECK_FALSE(fit.read_clamped);
    CHECK_FALSE(fit.shot_clamped);
  }
  SUBCASE("homoscedastic") {
    std::vector<MeanVariance> pts{{0.1, 3e-4}, {0.5, 3e-4}, {0.9, 3e-4}};
    const ProfileFit fit = estimate_profile(pts);
    CHECK(fit.profile.lambda_read == doctest::Approx(3e-4).epsilon(1e-9));
    CHECK(std::abs(fit.profile.lambda_shot) < 1e-15);
  }
  SUBCASE("negative intercept is clamped and flagged") {
    std::vector<MeanVariance> pts{{0.2, 0.0}, {0.5, 3e-4}, {0.8, 6e-4}};
    const ProfileFit fit = estimate_profile(pts);
    CHECK(fit.read_clamped);
    CHECK(fit.profile.lambda_read == 0.0);
    CHECK_FALSE(fit.diagnostics.empty());
  }
  SUBCASE("negative slope is clamped and flagged") {
    std::vector<MeanVariance> pts{{0.2, 6e-4}, {0.5, 3e-4}, {0.8, 1e-4}};
    const ProfileFit fit = estimate_profile(pts);
    CHECK(fit.shot_clamped);
    CHECK(fit.profile.lambda_shot == 0.0);
  }
  SUBCASE("noiseless data is reported") {
    std::vector<MeanVariance> pts{{0.2, 0.0}, {0.5, 0.0}, {0.8, 0.0}};
    CHECK(estimate_profile(pts).clean_data);
  }
  SUBCASE("weights") {
    std::vector<MeanVariance> pts{{0.1, 1e-4}, {0.5, 5e-4}, {0.9, 9e-4}, {0.5, 1.0}};
    std::vector<double> w{1, 1, 1, 0};
    const ProfileFit fit = estimate_profile(pts, w);
    CHECK(fit.profile.lambda_shot == doctest::Approx(1e-3).epsilon(1e-9));
    CHECK_THROWS_AS(estimate_profile(pts, std::vector<double>{1, 2}), ParameterError);
  }
  SUBCASE("too few levels") {
    std::vector<MeanVariance> two{{0.1, 1e-4}, {0.5, 5e-4}, {0.5, 5e-4}};
    CHECK_THROWS_AS(estimate_profile(two), ValidationError);
    std::vector<MeanVariance> same{{0.5, 1e-4}, {0.5, 2e-4}, {0.5, 3e-4}};
    CHECK_THROWS_WITH_AS(estimate_profile(same), doctest::Contains("rank-deficient"), ValidationError);
  }
  SUBCASE("closed loop from synthesized flats") {
    std::vector<std::vector<float>> patches;
    for (int level = 0; level < 10; ++level) {
      RawImage flat(158, 158, 16, static_cast<float>(0.05 + 0.09 * level));  // ~10^5 samples
      const RawImage noisy = add_shot_read_noise_seeded(flat, {1e-4, 1e-3, "t"}, 1000 + level);
      std::vector<float> samples;
      for (const auto& p : noisy.planes) {
        samples.insert(samples.end(), p.values().begin(), p.values().end());
      }
      patches.push_back(std::move(samples));
    }
    const ProfileFit fit = estimate_profile_from_patches(patches);
    CHECK(std::abs(fit.profile.lambda_read - 1e-4) / 1e-4 < 0.1);
    CHECK(std::abs(fit.profile.lambda_shot - 1e-3) / 1e-3 < 0.1);
  }
}

TEST_CASE("registry text format") {
  std::istringstream in("# device A\nphone-iso100 1e-6 2e-4\n\nphone-iso800 3.5e-5 1.2e-3  # bright\n");
  const ProfileRegistry r = parse_registry(in, "reg.txt");
  REQUIRE(r.profiles.size() == 2);
  CHECK(r.profiles[1].label == "phone-iso800");
  CHECK(r.profiles[1].lambda_read == 3.5e-5);

  std::istringstream line(format_registry_line(r.profiles[1]));
  CHECK(parse_registry(line, "x").profiles[0] == r.profiles[1]);

  std::istringstream bad("p 1e-6\n");
  CHECK_THROWS_WITH_AS(parse_registry(bad, "reg.txt"), doctest::Contains("reg.txt:1"), FormatError);
  std::istringstream negative("p -1e-6 1e-3\n");
  CHECK_THROWS_AS(parse_registry(negative, "reg.txt"), ValidationError);
  std::istringstream empty("# nothing\n");
  CHECK_THROWS_AS(parse_registry(empty, "reg.txt"), ValidationError);
  CHECK_THROWS_AS(read_registry("/nonexistent/registry"), IoError);
}
