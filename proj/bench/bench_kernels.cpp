// Serial reference vs OpenMP kernel timings. Argument is the mode count N.

#include <benchmark/benchmark.h>

#include "stokesopt/fiber_sim.hpp"
#include "stokesopt/kernels.hpp"
#include "stokesopt/vector_sets.hpp"

using namespace stokesopt;

namespace {

CMatrix states_for(const benchmark::State& st) { return random_set(static_cast<int>(st.range(0)), 11).states(); }

template <typename F>
void run(benchmark::State& st, F&& f) {
  for (auto _ : st) benchmark::DoNotOptimize(f());
}

void BM_overlaps(benchmark::State& st) {
  const CMatrix s = states_for(st);
  run(st, [&] { return kernels::overlaps(s); });
}
void BM_overlaps_serial(benchmark::State& st) {
  const CMatrix s = states_for(st);
  run(st, [&] { return kernels::overlaps_serial(s); });
}

void BM_stokes_gram(benchmark::State& st) {
  const CMatrix s = states_for(st);
  run(st, [&] { return kernels::stokes_gram(s); });
}
void BM_stokes_gram_serial(benchmark::State& st) {
  const CMatrix s = states_for(st);
  run(st, [&] { return kernels::stokes_gram_serial(s); });
}

void BM_xi_gradient(benchmark::State& st) {
  const CMatrix s = states_for(st);
  const CMatrix ov = kernels::overlaps(s);
  const RMatrix w = RMatrix::Identity(s.cols(), s.cols());
  run(st, [&] { return kernels::xi_gradient(s, ov, w); });
}
void BM_xi_gradient_serial(benchmark::State& st) {
  const CMatrix s = states_for(st);
  const CMatrix ov = kernels::overlaps_serial(s);
  const RMatrix w = RMatrix::Identity(s.cols(), s.cols());
  run(st, [&] { return kernels::xi_gradient_serial(s, ov, w); });
}

void BM_frame_potential(benchmark::State& st) {
  const CMatrix s = states_for(st);
  run(st, [&] { return kernels::frame_potential(s, nullptr); });
}
void BM_frame_potential_serial(benchmark::State& st) {
  const CMatrix s = states_for(st);
  run(st, [&] { return kernels::frame_potential_serial(s, nullptr); });
}

void BM_squared_overlap_change(benchmark::State& st) {
  const CMatrix s = states_for(st);
  const CMatrix ov = kernels::overlaps(s);
  const CMatrix step = 1e-3 * random_set(static_cast<int>(st.range(0)), 12).states();
  run(st, [&] { return kernels::squared_overlap_change(s, ov, step); });
}
void BM_squared_overlap_change_serial(benchmark::State& st) {
  const CMatrix s = states_for(st);
  const CMatrix ov = kernels::overlaps_serial(s);
  const CMatrix step = 1e-3 * random_set(static_cast<int>(st.range(0)), 12).states();
  run(st, [&] { return kernels::squared_overlap_change_serial(s, ov, step); });
}

FiberModel md_fiber(int n) {
  RVector md = RVector::Constant(stokes_dim(n), 1e-13);
  return synth_md_fiber(n, 1e-10, md, 5);
}

void BM_monte_carlo_md(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const FiberModel f = md_fiber(n);
  const LaunchSet set = yang_nolan(n);
  run(st, [&] { return monte_carlo_md(f, set, ReceiverModel{}, 200, 1).ratio; });
}
void BM_monte_carlo_md_serial(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const FiberModel f = md_fiber(n);
  const LaunchSet set = yang_nolan(n);
  run(st, [&] { return monte_carlo_md_serial(f, set, ReceiverModel{}, 200, 1).ratio; });
}

}  // namespace

#define KERNEL_SIZES Arg(4)->Arg(8)->Arg(16)->Arg(32)
BENCHMARK(BM_overlaps)->KERNEL_SIZES;
BENCHMARK(BM_overlaps_serial)->KERNEL_SIZES;
BENCHMARK(BM_stokes_gram)->KERNEL_SIZES;
BENCHMARK(BM_stokes_gram_serial)->KERNEL_SIZES;
BENCHMARK(BM_xi_gradient)->KERNEL_SIZES;
BENCHMARK(BM_xi_gradient_serial)->KERNEL_SIZES;
BENCHMARK(BM_frame_potential)->KERNEL_SIZES;
BENCHMARK(BM_frame_potential_serial)->KERNEL_SIZES;
BENCHMARK(BM_squared_overlap_change)->KERNEL_SIZES;
BENCHMARK(BM_squared_overlap_change_serial)->KERNEL_SIZES;
BENCHMARK(BM_monte_carlo_md)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_monte_carlo_md_serial)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
