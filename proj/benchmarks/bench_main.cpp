#include <benchmark/benchmark.h>

#include <cmath>

#include "rbfmgn/assembly.hpp"
#include "rbfmgn/geometry.hpp"
#include "rbfmgn/nn/adam.hpp"
#include "rbfmgn/rbf_stencil.hpp"
#include "rbfmgn/training.hpp"

using namespace rbfmgn;

namespace {

NodeSet amoeba_nodes(int scale) { return sample_nodes(DomainSpec::amoeba(), 195 * scale, 64 * scale, 1); }

void BM_SampleAndTriangulate(benchmark::State& state) {
  for (auto _ : state) {
    const Graph g = triangulate(amoeba_nodes(static_cast<int>(state.range(0))), nullptr);
    benchmark::DoNotOptimize(g.triangles.data());
  }
}
BENCHMARK(BM_SampleAndTriangulate)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_BuildStencils(benchmark::State& state) {
  const NodeSet nodes = amoeba_nodes(1);
  const int m = static_cast<int>(state.range(0));
  for (auto _ : state) {
    const StencilSet s = build_stencil_set(nodes, m, RbfKernel{KernelKind::Polyharmonic3, 1.0}, 2);
    benchmark::DoNotOptimize(s.stencils.data());
  }
  state.SetItemsProcessed(state.iterations() * nodes.size());
}
BENCHMARK(BM_BuildStencils)->Arg(10)->Arg(15)->Arg(25)->Unit(benchmark::kMillisecond);

void BM_ApplyOperator(benchmark::State& state) {
  const NodeSet nodes = amoeba_nodes(4);
  const StencilSet s = build_stencil_set(nodes, 15, RbfKernel{KernelKind::Polyharmonic3, 1.0}, 2);
  std::vector<double> u;
  for (const Point2& p : nodes.coords) u.push_back(std::cos(p.x) + std::cos(p.y));
  for (auto _ : state) benchmark::DoNotOptimize(apply_operator(s, u).data());
}
BENCHMARK(BM_ApplyOperator);

void BM_DirectStep(benchmark::State& state) {
  const ProblemSpec p = ProblemSpec::amoeba_heat(1.0);
  const NodeSet nodes = amoeba_nodes(1);
  const StencilSet s = build_stencil_set(nodes, 15, RbfKernel{KernelKind::Polyharmonic3, 1.0}, 2);
  const ResidualSystem sys = assemble_heat(s, p, nodes, 0);
  const std::vector<double> u = initial_condition(p, nodes).values;
  for (auto _ : state) benchmark::DoNotOptimize(direct_step(sys, u).values.data());
}
BENCHMARK(BM_DirectStep);

// One Adam step on a batch of five levels, as in training.
void BM_TrainingStep(benchmark::State& state) {
  const ProblemSpec p = ProblemSpec::amoeba_heat(1.0);
  const NodeSet nodes = amoeba_nodes(1);
  Graph g = triangulate(nodes, &p.domain);
  StencilSet s = build_stencil_set(g.nodes, 15, RbfKernel{KernelKind::Polyharmonic3, 1.0}, 2);
  const Setup setup = make_setup(p, std::move(g), std::move(s), 10);
  std::vector<LossLevel> batch;
  for (int l = 0; l < 5; ++l) batch.push_back(make_loss_level(setup, l, false));
  nn::ModelParams model = nn::init_model(model_config_for(p, 64, 64, static_cast<int>(state.range(0))), 1);
  nn::AdamState adam = nn::make_adam(model);
  for (auto _ : state) {
    nn::ModelParams grads = nn::zeros_like(model);
    benchmark::DoNotOptimize(pde_loss(model, setup.topology, setup.nodes(), batch, &grads));
    nn::adam_step(model, grads, adam);
  }
}
BENCHMARK(BM_TrainingStep)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
