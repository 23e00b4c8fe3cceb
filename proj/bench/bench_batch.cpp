#include <benchmark/benchmark.h>

#include "tumblenav/batch.hpp"

using namespace tumblenav;

namespace {

// Shorter than the default run so each iteration stays around a second.
std::vector<Scenario> batch(int runs) {
  Scenario base;
  base.duration = 30.0;
  base.occlusions = {{20.0, 25.0}};
  return seed_batch(base, runs);
}

void BM_BatchSerial(benchmark::State& state) {
  const auto scenarios = batch(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_batch_serial(scenarios));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BatchParallel(benchmark::State& state) {
  const auto scenarios = batch(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_batch(scenarios));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_BatchSerial)->Arg(8)->Arg(25)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BatchParallel)->Arg(8)->Arg(25)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
