/// @file stencil_bench.cpp
/// @brief Microbenchmarks for the hot kernels: spatial stencils, one RK4
/// step of each flow, and a pointwise margin evaluation.

#include <benchmark/benchmark.h>

#include "harnacklab/dynamics.hpp"
#include "harnacklab/geometry.hpp"
#include "harnacklab/harnack.hpp"

namespace {

using namespace harnacklab;

ScalarField seeded_field(const ManifoldGrid& grid) {
  InitParams init;
  init.seed = 9;
  return initial_field(grid, init);
}

void BM_LaplacianTorus1D(benchmark::State& state) {
  ManifoldGrid grid = build_torus(1, static_cast<int>(state.range(0)), 1.0);
  ScalarField field = seeded_field(grid);
  for (auto _ : state) {
    benchmark::DoNotOptimize(laplacian(grid, field, 1.0));
  }
  state.SetItemsProcessed(state.iterations() * grid.node_count());
}
BENCHMARK(BM_LaplacianTorus1D)->Arg(256)->Arg(1024);

void BM_LaplacianTorus2D(benchmark::State& state) {
  ManifoldGrid grid = build_torus(2, static_cast<int>(state.range(0)), 1.0);
  ScalarField field = seeded_field(grid);
  for (auto _ : state) {
    benchmark::DoNotOptimize(laplacian(grid, field, 1.0));
  }
  state.SetItemsProcessed(state.iterations() * grid.node_count());
}
BENCHMARK(BM_LaplacianTorus2D)->Arg(64)->Arg(128);

void BM_LaplacianSphere(benchmark::State& state) {
  ManifoldGrid grid = build_sphere(static_cast<int>(state.range(0)));
  ScalarField field = seeded_field(grid);
  for (auto _ : state) {
    benchmark::DoNotOptimize(laplacian(grid, field, 1.0));
  }
  state.SetItemsProcessed(state.iterations() * grid.node_count());
}
BENCHMARK(BM_LaplacianSphere)->Arg(128)->Arg(512);

void BM_HessianTorus2D(benchmark::State& state) {
  ManifoldGrid grid = build_torus(2, static_cast<int>(state.range(0)), 1.0);
  ScalarField field = seeded_field(grid);
  for (auto _ : state) {
    benchmark::DoNotOptimize(hessian_frame(grid, field, 1.0));
  }
  state.SetItemsProcessed(state.iterations() * grid.node_count());
}
BENCHMARK(BM_HessianTorus2D)->Arg(64)->Arg(128);

void BM_StepLogHeat2D(benchmark::State& state) {
  ManifoldGrid grid = build_torus(2, static_cast<int>(state.range(0)), 1.0);
  FlowSpec spec;
  spec.equation = Equation::LogHeat;
  spec.a = 1.0;
  spec.metric = MetricSchedule::static_torus();
  ScalarField field = seeded_field(grid);
  double dt = stable_dt(grid, spec);
  for (auto _ : state) {
    benchmark::DoNotOptimize(step(grid, spec, field, 0.1, dt));
  }
  state.SetItemsProcessed(state.iterations() * grid.node_count());
}
BENCHMARK(BM_StepLogHeat2D)->Arg(64)->Arg(128);

void BM_StepSurfaceFlow(benchmark::State& state) {
  ManifoldGrid grid = build_sphere(static_cast<int>(state.range(0)));
  FlowSpec spec;
  spec.equation = Equation::LogSobolevEps;
  spec.epsilon = 1.0;
  spec.metric = MetricSchedule::eps_ricci_sphere(1.0, 1.0);
  spec.t_end = 0.4;
  InitParams init;
  init.seed = 9;
  init.amplitude = 0.3;
  ScalarField field = initial_field(grid, init);
  double dt = stable_dt(grid, spec);
  for (auto _ : state) {
    benchmark::DoNotOptimize(step(grid, spec, field, 0.1, dt));
  }
  state.SetItemsProcessed(state.iterations() * grid.node_count());
}
BENCHMARK(BM_StepSurfaceFlow)->Arg(128)->Arg(512);

void BM_TraceMargin2D(benchmark::State& state) {
  ManifoldGrid grid = build_torus(2, static_cast<int>(state.range(0)), 1.0);
  ScalarField field = seeded_field(grid);
  for (auto _ : state) {
    benchmark::DoNotOptimize(trace_quantity(grid, field, 0.5, 1.0, 1.0));
  }
  state.SetItemsProcessed(state.iterations() * grid.node_count());
}
BENCHMARK(BM_TraceMargin2D)->Arg(64)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
