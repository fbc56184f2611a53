#include "blowuplab/linop.hpp"
#include "blowuplab/modeanalysis.hpp"

#include <benchmark/benchmark.h>

using namespace blowuplab;

namespace {

void BM_ModeScan(benchmark::State& state) {
  const auto grid = lambda_grid(0.0, 3.0, -3.0, 3.0, 0.2);
  for (auto _ : state) benchmark::DoNotOptimize(mode_scan(0.75, grid, int(state.range(0))));
  state.SetItemsProcessed(state.iterations() * grid.size());
}

void BM_ModeScanSerial(benchmark::State& state) {
  const auto grid = lambda_grid(0.0, 3.0, -3.0, 3.0, 0.2);
  for (auto _ : state) benchmark::DoNotOptimize(mode_scan_serial(0.75, grid, int(state.range(0))));
  state.SetItemsProcessed(state.iterations() * grid.size());
}

void BM_Riesz(benchmark::State& state) {
  const Eigen::MatrixXd L = assemble_Lp(0.75, int(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(riesz_projection(L, {1.0, 0.5, 64}));
}

void BM_RieszSerial(benchmark::State& state) {
  const Eigen::MatrixXd L = assemble_Lp(0.75, int(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(riesz_projection_serial(L, {1.0, 0.5, 64}));
}

}  // namespace

BENCHMARK(BM_ModeScan)->Arg(40)->Arg(80)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ModeScanSerial)->Arg(40)->Arg(80)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Riesz)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RieszSerial)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
