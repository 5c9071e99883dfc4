// Microbenchmarks for the hot paths: raw generator, normal draws, field
// evaluation at several noise levels, one full mean-path simulation, and one
// exact-closed-loop solve.

#include <benchmark/benchmark.h>

#include "mfgsel/coefficients.hpp"
#include "mfgsel/decoupling_field.hpp"
#include "mfgsel/mfg_sim.hpp"
#include "mfgsel/model.hpp"
#include "mfgsel/nplayer_sim.hpp"
#include "mfgsel/rng.hpp"

namespace {

const mfgsel::CoefficientTable& shared_table() {
  static const mfgsel::CoefficientTable table = [] {
    mfgsel::ModelParams params;
    return mfgsel::build_coefficients(
        params, mfgsel::TimeGrid::uniform(1.0, 1e-3, 0.5));
  }();
  return table;
}

void BM_PhiloxBlock(benchmark::State& state) {
  std::array<std::uint32_t, 4> ctr{1, 2, 3, 4};
  const std::array<std::uint32_t, 2> key{5, 6};
  for (auto _ : state) {
    ++ctr[0];
    benchmark::DoNotOptimize(mfgsel::philox::block(ctr, key));
  }
}
BENCHMARK(BM_PhiloxBlock);

void BM_NormalDraw(benchmark::State& state) {
  mfgsel::NormalStream stream(42, 7);
  for (auto _ : state) benchmark::DoNotOptimize(stream.next());
}
BENCHMARK(BM_NormalDraw);

void BM_FieldValue(benchmark::State& state) {
  const double sigma0 = static_cast<double>(state.range(0)) / 1000.0;
  const mfgsel::ViscousField field(
      mfgsel::borrow_table(shared_table()), sigma0,
      mfgsel::make_terminal(
          mfgsel::TerminalCondition{shared_table().r_delta()}));
  int i = 0;
  for (auto _ : state) {
    const double t = 0.3 + 1e-6 * (i % 101);
    const double x = 0.05 + 1e-5 * (i % 37);
    ++i;
    benchmark::DoNotOptimize(field.value(t, x));
  }
}
BENCHMARK(BM_FieldValue)->Arg(500)->Arg(100)->Arg(50);

void BM_SimulateMeanPath(benchmark::State& state) {
  const double sigma0 = 0.05;
  const mfgsel::ViscousField field(
      mfgsel::borrow_table(shared_table()), sigma0,
      mfgsel::make_terminal(
          mfgsel::TerminalCondition{shared_table().r_delta()}));
  std::uint64_t p = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        mfgsel::simulate_mu(field, sigma0, shared_table(), 0.0, 1, p++));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(shared_table().grid().steps()));
}
BENCHMARK(BM_SimulateMeanPath)->Unit(benchmark::kMillisecond);

void BM_ExactPicard(benchmark::State& state) {
  mfgsel::ModelParams params;
  std::uint64_t run = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(mfgsel::solve_exact_picard(
        static_cast<std::size_t>(state.range(0)), params, shared_table(), 99,
        run++));
  state.SetLabel("full solve");
}
BENCHMARK(BM_ExactPicard)->Arg(32)->Unit(benchmark::kMillisecond)->Iterations(2);

}  // namespace

BENCHMARK_MAIN();
