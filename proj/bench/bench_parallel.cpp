// Serial reference loops against their OpenMP counterparts.

#include "vclink/nulldist.hpp"
#include "vclink/parallel.hpp"
#include "vclink/sim.hpp"

#include <benchmark/benchmark.h>

using namespace vclink;

namespace {

VMatrix standard_v(int k) {
  const auto c = StudyConfig::standard(k);
  return known_parameter_v(c.G, c.E);
}

void BM_GenerateSerial(benchmark::State& state) {
  const auto V = standard_v(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(generate_serial(V, 2000, 1));
  state.SetItemsProcessed(state.iterations() * 2000);
}

void BM_GenerateParallel(benchmark::State& state) {
  const auto V = standard_v(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(generate(V, 2000, 1));
  state.SetItemsProcessed(state.iterations() * 2000);
}

StudyConfig small_study() {
  auto c = StudyConfig::standard(2);
  c.nReplicates = 64;
  c.nFamilies = 500;
  return c;
}

void BM_StudySerial(benchmark::State& state) {
  const auto c = small_study();
  for (auto _ : state) benchmark::DoNotOptimize(run_null_study_serial(c));
  state.SetItemsProcessed(state.iterations() * c.nReplicates);
}

void BM_StudyParallel(benchmark::State& state) {
  const auto c = small_study();
  for (auto _ : state) benchmark::DoNotOptimize(run_null_study(c));
  state.SetItemsProcessed(state.iterations() * c.nReplicates);
}

}  // namespace

BENCHMARK(BM_GenerateSerial)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GenerateParallel)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StudySerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StudyParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
