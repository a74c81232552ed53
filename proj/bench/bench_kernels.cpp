// Serial references against the OpenMP kernels on the same inputs.

#include <benchmark/benchmark.h>

#include "deltalab/expander.hpp"
#include "deltalab/frostman.hpp"
#include "deltalab/harness.hpp"
#include "deltalab/incidence.hpp"

namespace dl = deltalab;

namespace {

const dl::GridSet2D& kt_input() {
  static const dl::GridSet2D set = [] {
    const auto A = dl::random_frostman_set(dl::Scale::of(9), 0.6, 7);
    std::vector<dl::Cell2> cells;
    for (auto i : A.cells())
      for (auto j : A.cells()) cells.push_back({i, j});
    return dl::GridSet2D(A.scale(), std::move(cells));
  }();
  return set;
}

const dl::TheoremInstance& incidence_input() {
  static const auto inst = dl::generate_instance(dl::Scale::of(10), 0.5, dl::InstanceStyle::Random, 3);
  return inst;
}

const dl::PairSet& energy_input() {
  static const auto pairs = [] {
    dl::SetSpec cantor;
    cantor.kind = dl::SetSpec::Kind::Cantor;
    const auto A = dl::half_interval_set(cantor, dl::Scale::of(11));
    return dl::PairSet::full(A, A);
  }();
  return pairs;
}

void BM_validate_serial(benchmark::State& state) {
  const auto& cells = kt_input().cells();
  for (auto _ : state)
    benchmark::DoNotOptimize(dl::serial::validate_cells(std::span<const dl::Cell2>(cells), kt_input().scale(),
                                                        dl::SetKind::KatzTao, 1.2));
}

void BM_validate_parallel(benchmark::State& state) {
  const auto& cells = kt_input().cells();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        dl::validate_cells(std::span<const dl::Cell2>(cells), kt_input().scale(), dl::SetKind::KatzTao, 1.2));
}

void BM_shading_serial(benchmark::State& state) {
  const auto& inst = incidence_input();
  for (auto _ : state) benchmark::DoNotOptimize(dl::serial::full_shading(inst.tubes, inst.squares));
}

void BM_shading_parallel(benchmark::State& state) {
  const auto& inst = incidence_input();
  for (auto _ : state) benchmark::DoNotOptimize(dl::full_shading(inst.tubes, inst.squares));
}

void BM_energy_serial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(dl::serial::energy_count(energy_input()));
}

void BM_energy_parallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(dl::energy_count(energy_input()));
}

}  // namespace

BENCHMARK(BM_validate_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_validate_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_shading_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_shading_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_energy_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_energy_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
