#include <benchmark/benchmark.h>

#include "mixfbm/fredholm.hpp"
#include "mixfbm/gaussian_sim.hpp"
#include "mixfbm/kernels.hpp"
#include "mixfbm/model.hpp"

using namespace mixfbm;

namespace {

const DerivedConstants& consts() {
  static const DerivedConstants k = derive_constants(HurstPair{0.6, 0.9});
  return k;
}

void bm_assemble(benchmark::State& st) {
  const KernelContext ctx(consts());
  KernelTables::get(consts().hurst);  // table build is a one-off, keep it out of the loop
  const QuadratureGrid g = build_grid(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(assemble(ctx, g));
}
BENCHMARK(bm_assemble)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void bm_solve(benchmark::State& st) {
  const OperatorPtr op = assemble(KernelContext(consts()), build_grid(static_cast<int>(st.range(0))));
  for (auto _ : st) benchmark::DoNotOptimize(solve_second_kind(op, 5.0, consts()));
}
BENCHMARK(bm_solve)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void bm_molchan_matrix(benchmark::State& st) {
  const auto t = positive_times(uniform_grid(1.0, static_cast<int>(st.range(0))));
  for (auto _ : st) benchmark::DoNotOptimize(molchan_matrix(t, 0.6));
}
BENCHMARK(bm_molchan_matrix)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void bm_inverse_matrix(benchmark::State& st) {
  const auto t = positive_times(uniform_grid(1.0, static_cast<int>(st.range(0))));
  for (auto _ : st) benchmark::DoNotOptimize(inverse_matrix(t, 0.6));
}
BENCHMARK(bm_inverse_matrix)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void bm_sample_batch(benchmark::State& st) {
  const CovarianceModel cm = covariance_model_X(uniform_grid(1.0, 512), consts(), 1.0);
  std::uint64_t first = 0;
  for (auto _ : st) {
    benchmark::DoNotOptimize(cm.sample_batch(7, first, 256, 1));
    first += 256;
  }
  st.SetItemsProcessed(st.iterations() * 256);
}
BENCHMARK(bm_sample_batch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
