// Serial references against their optimised / OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <omp.h>

#include "galam/exact.hpp"
#include "galam/process.hpp"

using namespace galam;

namespace {

process::TrialConfig ensemble_config(std::int64_t rooms) {
  process::TrialConfig tc{RoomConfig::uniform(3, rooms)};
  tc.initial_positive = rooms * 3 * 6 / 10;
  tc.seed = 1;
  return tc;
}

void BM_EnsembleSerial(benchmark::State& state) {
  const auto tc = ensemble_config(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(process::run_ensemble_serial(tc, 256));
}

void BM_EnsembleParallel(benchmark::State& state) {
  const auto tc = ensemble_config(state.range(0));
  const int workers = omp_get_max_threads();
  for (auto _ : state) benchmark::DoNotOptimize(process::run_ensemble(tc, 256, workers));
  state.counters["workers"] = workers;
}

void BM_RoundPerRoom(benchmark::State& state) {
  const auto c = RoomConfig(std::map<int, std::int64_t>{{3, state.range(0)}, {4, state.range(0)}});
  process::Engine rng(1);
  const auto u = c.n() / 2;
  for (auto _ : state) benchmark::DoNotOptimize(process::reference::sample_round_rooms(c, VariantSpec::standard(), u, rng));
}

void BM_RoundAggregated(benchmark::State& state) {
  const auto c = RoomConfig(std::map<int, std::int64_t>{{3, state.range(0)}, {4, state.range(0)}});
  process::Engine rng(1);
  const auto u = c.n() / 2;
  for (auto _ : state) benchmark::DoNotOptimize(process::sample_round(c, u, rng));
}

void BM_MatrixSerial(benchmark::State& state) {
  const auto c = RoomConfig::uniform(3, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(exact::transition_matrix_serial(c));
}

void BM_MatrixParallel(benchmark::State& state) {
  const auto c = RoomConfig::uniform(3, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(exact::transition_matrix(c));
}

}  // namespace

BENCHMARK(BM_EnsembleSerial)->Arg(1000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EnsembleParallel)->Arg(1000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RoundPerRoom)->Arg(100)->Arg(10000)->Arg(1000000);
BENCHMARK(BM_RoundAggregated)->Arg(100)->Arg(10000)->Arg(1000000);
BENCHMARK(BM_MatrixSerial)->Arg(50)->Arg(300)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MatrixParallel)->Arg(50)->Arg(300)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
