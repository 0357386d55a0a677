#include <benchmark/benchmark.h>

#include "admgs/rng.hpp"
#include "admgs/sh.hpp"

using namespace admgs;

static void BM_ShBasis(benchmark::State& state) {
  const int degree = int(state.range(0));
  Rng rng(1);
  Vec3<double> d{rng.normal(), rng.normal(), rng.normal()};
  d = d.normalized();
  double out[25];
  for (auto _ : state) {
    sh_basis_unchecked(d, degree, out);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_ShBasis)->Arg(1)->Arg(3)->Arg(4);

static void BM_ShBasisGradient(benchmark::State& state) {
  Rng rng(2);
  Vec3<double> d{rng.normal(), rng.normal(), rng.normal()};
  d = d.normalized();
  Vec3<double> grad[25];
  for (auto _ : state) {
    sh_basis_gradient_unchecked(d, 4, grad);
    benchmark::DoNotOptimize(grad);
  }
}
BENCHMARK(BM_ShBasisGradient);
