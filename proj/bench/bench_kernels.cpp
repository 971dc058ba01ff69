// Serial reference vs OpenMP kernels on 248x248x4 patches.

#include <benchmark/benchmark.h>

#include <omp.h>

#include "rawdeg/degrade.hpp"
#include "rawdeg/metrics.hpp"
#include "rawdeg/reference.hpp"
#include "support/synthetic.hpp"

using namespace rawdeg;

namespace {

const RawImage& patch() {
  static const RawImage p = testing::synthetic_patch(1, 248);
  return p;
}

const Kernel& kernel21() {
  static const Kernel k = gaussian_kernel(21, 3.5, 1.2, 0.4);
  return k;
}

void BM_ConvolveReference(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(reference::convolve(patch(), kernel21()));
  }
}

void BM_ConvolveParallel(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(convolve(patch(), kernel21()));
  }
}

void BM_NoiseReference(benchmark::State& state) {
  const NoiseProfile p{1e-5, 1e-3, "bench"};
  for (auto _ : state) {
    benchmark::DoNotOptimize(reference::add_shot_read_noise(patch(), p, 7));
  }
}

void BM_NoiseParallel(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const NoiseProfile p{1e-5, 1e-3, "bench"};
  for (auto _ : state) {
    benchmark::DoNotOptimize(add_shot_read_noise_seeded(patch(), p, 7));
  }
}

void BM_SsimReference(benchmark::State& state) {
  const RawImage other = testing::synthetic_patch(2, 248);
  for (auto _ : state) {
    benchmark::DoNotOptimize(reference::ssim(patch(), other));
  }
}

void BM_SsimParallel(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const RawImage other = testing::synthetic_patch(2, 248);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ssim(patch(), other));
  }
}

void BM_DegradeLevel2(benchmark::State& state) {
  omp_set_num_threads(1);
  const DegradationConfig cfg = DegradationConfig::defaults(Level::two);
  std::uint64_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(degrade(patch(), cfg, stable_mix(cfg.master_seed, i++)));
  }
}

void BM_DegradeBatch(benchmark::State& state) {
  const DegradationConfig cfg = DegradationConfig::defaults(Level::two);
  const std::vector<RawImage> batch(64, patch());
  for (auto _ : state) {
    benchmark::DoNotOptimize(degrade_batch(batch, cfg, static_cast<int>(state.range(0))));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}

}  // namespace

BENCHMARK(BM_ConvolveReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvolveParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_NoiseReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NoiseParallel)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SsimReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SsimParallel)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_DegradeLevel2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DegradeBatch)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
