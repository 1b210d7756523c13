// Parallel kernels against their serial references. Run with
// --benchmark_filter=... to pick one; thread counts are the second argument.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "btw/apsieve.hpp"
#include "btw/expsums.hpp"
#include "btw/kloosterman.hpp"
#include "btw/rng.hpp"

using namespace btw;

namespace {

void BM_ResidueCounts(benchmark::State& state) {
  const auto x = static_cast<u64>(state.range(0));
  const int threads = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(residue_counts(x, 10007, {std::size_t{1} << 20, threads}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x));
}
BENCHMARK(BM_ResidueCounts)->Args({10'000'000, 1})->Args({10'000'000, 4})->Unit(benchmark::kMillisecond);

void BM_ResidueCountsSimple(benchmark::State& state) {
  const auto x = static_cast<u64>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(reference::residue_counts_simple(x, 10007));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x));
}
BENCHMARK(BM_ResidueCountsSimple)->Arg(10'000'000)->Unit(benchmark::kMillisecond);

void BM_TableFast(benchmark::State& state) {
  const PrimeModulus q(static_cast<u64>(state.range(0)));
  omp_set_num_threads(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(build_table(q));
}
BENCHMARK(BM_TableFast)->Args({10007, 1})->Args({10007, 4})->Args({1000003, 1})->Args({1000003, 4})
    ->Unit(benchmark::kMillisecond);

void BM_TableDirect(benchmark::State& state) {
  const PrimeModulus q(static_cast<u64>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(reference::build_table_direct(q));
}
BENCHMARK(BM_TableDirect)->Arg(10007)->Unit(benchmark::kMillisecond);

std::vector<cplx> coefficients(std::size_t n) {
  CounterRng rng(1);
  std::vector<cplx> v(n);
  for (auto& z : v) z = rng.unimodular();
  return v;
}

void BM_PowerMoment(benchmark::State& state) {
  static const KloostermanTable table = build_table(PrimeModulus(1009));
  const auto coeffs = coefficients(8);
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(power_moment(table, coeffs, 1, 2, threads));
}
BENCHMARK(BM_PowerMoment)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_PowerMomentSerial(benchmark::State& state) {
  static const KloostermanTable table = build_table(PrimeModulus(1009));
  const auto coeffs = coefficients(8);
  for (auto _ : state) benchmark::DoNotOptimize(reference::power_moment_serial(table, coeffs, 1, 2));
}
BENCHMARK(BM_PowerMomentSerial)->Unit(benchmark::kMillisecond);

void BM_RhoCensus(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const RhoConfig cfg{PrimeModulus(101), 1, 3, 2, 3, 2};
  for (auto _ : state) benchmark::DoNotOptimize(rho_census(cfg).sigma2);
}
BENCHMARK(BM_RhoCensus)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
