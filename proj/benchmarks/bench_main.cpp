#include <benchmark/benchmark.h>

#include "nclp/czkit.hpp"
#include "nclp/cuculescu.hpp"
#include "nclp/pseudoloc.hpp"
#include "nclp/random.hpp"

using namespace nclp;

static void BM_SpectralProjection(benchmark::State& state) {
  Rng rng(1);
  const Matrix h = random_hermitian(rng, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(spectral_projection(h, Interval::above(0.0)));
}
BENCHMARK(BM_SpectralProjection)->Arg(16)->Arg(64)->Arg(128);

static void BM_Cuculescu(benchmark::State& state) {
  const Martingale f = random_positive_martingale(AlgebraSpec::tensor(static_cast<int>(state.range(0))), 2);
  for (auto _ : state) benchmark::DoNotOptimize(cuculescu(f, 2.0));
}
BENCHMARK(BM_Cuculescu)->Arg(4)->Arg(6);

static void BM_CzDecompose(benchmark::State& state) {
  const Filtration filt(AlgebraSpec::grid(1, static_cast<int>(state.range(0)), 2));
  Rng rng(3);
  const Matrix f = random_positive(rng, filt);
  for (auto _ : state) benchmark::DoNotOptimize(cz_decompose(filt, f, 2.0));
}
BENCHMARK(BM_CzDecompose)->Arg(4)->Arg(6);

static void BM_PhiS(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  const DiscOp t = assemble(lp_bump_kernel(K), DyadicGrid(1, K));
  for (auto _ : state) benchmark::DoNotOptimize(phi_s(t, 3));
}
BENCHMARK(BM_PhiS)->Arg(7)->Arg(9)->Unit(benchmark::kMillisecond);

static void BM_DiscNorm(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  const DiscOp t = assemble(lp_bump_kernel(K), DyadicGrid(1, K));
  for (auto _ : state) benchmark::DoNotOptimize(disc_norm(t));
}
BENCHMARK(BM_DiscNorm)->Arg(7)->Arg(9)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
