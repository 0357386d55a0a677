#include <benchmark/benchmark.h>

#include <filesystem>

#include "admgs/dataset.hpp"
#include "admgs/trainer.hpp"

using namespace admgs;

static void BM_TrainStep(benchmark::State& state) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "admgs_bench_ds";
  if (!fs::exists(dir / "manifest.json")) {
    generate_dataset(suite_by_name("sanity-1splat"), dir.string());
  }
  RunConfig cfg;
  cfg.train.iterations = 1 << 20;
  cfg.model.max_static_points = int(state.range(0));
  cfg.model.sky_count = 96;
  TrainSession session(load_dataset(dir.string()), cfg);
  for (auto _ : state) {
    auto rec = session.step();
    benchmark::DoNotOptimize(rec.losses.total);
  }
}
BENCHMARK(BM_TrainStep)->Arg(120)->Unit(benchmark::kMillisecond);
