#include <benchmark/benchmark.h>

#include "admgs/fields.hpp"
#include "admgs/rng.hpp"

using namespace admgs;

static void BM_LightForward(benchmark::State& state) {
  Rng rng(1);
  FieldSet<float> f = FieldSet<float>::make({}, rng);
  std::vector<float> in(std::size_t(f.config.light_layout().total()));
  for (auto& v : in) v = float(rng.normal());
  MlpTape<float> tape;
  float raw[3];
  for (auto _ : state) {
    auto l = light_forward(f, in.data(), tape, raw);
    benchmark::DoNotOptimize(l);
  }
}
BENCHMARK(BM_LightForward);

static void BM_LightForwardBackward(benchmark::State& state) {
  Rng rng(2);
  FieldSet<float> f = FieldSet<float>::make({}, rng);
  std::vector<float> in(std::size_t(f.config.light_layout().total()));
  for (auto& v : in) v = float(rng.normal());
  MlpTape<float> tape;
  float raw[3];
  MlpGrad<float> g(f.light);
  std::vector<float> in_bar(in.size());
  for (auto _ : state) {
    auto l = light_forward(f, in.data(), tape, raw);
    light_backward(f, tape, raw, Vec3<float>{1, 1, 1}, in_bar.data(), g);
    benchmark::DoNotOptimize(l);
  }
}
BENCHMARK(BM_LightForwardBackward);
