#include <benchmark/benchmark.h>

#include "admgs/raster.hpp"
#include "admgs/rng.hpp"

using namespace admgs;

namespace {
std::vector<ShadedSplat<float>> random_splats(int count, int size) {
  Rng rng(7);
  std::vector<ShadedSplat<float>> splats(std::size_t(count));
  for (int i = 0; i < count; ++i) {
    auto& s = splats[std::size_t(i)];
    s.mean = {float(rng.uniform(0, size)), float(rng.uniform(0, size))};
    const float a = float(rng.normal(0, 3)), b = float(rng.normal(0, 3));
    s.cov2d = {a * a + 1.f, a * b * 0.2f, b * b + 1.f};
    s.depth = float(rng.uniform(1, 10));
    s.eff_opacity = float(rng.uniform(0.1, 0.9));
    s.color = {float(rng.uniform()), float(rng.uniform()), float(rng.uniform())};
    s.source = i;
  }
  return splats;
}
}  // namespace

static void BM_RasterizeForward(benchmark::State& state) {
  const int n = int(state.range(0));
  const auto splats = random_splats(n, 64);
  for (auto _ : state) {
    auto out = rasterize_forward(splats, 64, 64);
    benchmark::DoNotOptimize(out.rgb.data);
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_RasterizeForward)->Arg(100)->Arg(500)->Arg(2000);

static void BM_ReferenceRender(benchmark::State& state) {
  const auto splats = random_splats(int(state.range(0)), 64);
  for (auto _ : state) {
    auto out = reference_render(splats, 64, 64);
    benchmark::DoNotOptimize(out.rgb.data);
  }
}
BENCHMARK(BM_ReferenceRender)->Arg(100)->Arg(500);
