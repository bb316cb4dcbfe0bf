#include "ecrl/equivariant.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace ecrl;

namespace {

// Regular-field layer of width `blocks` over C_n.
EquivariantLinear make_layer(std::size_t n, std::size_t blocks) {
  const GroupPtr g = make_cyclic_group(n);
  return EquivariantLinear(ReprLayout(g, {{RepKind::regular, blocks}}), ReprLayout(g, {{RepKind::regular, blocks}}));
}

void BM_ProjectWeight(benchmark::State& state) {
  const EquivariantLinear layer = make_layer(static_cast<std::size_t>(state.range(0)), 32);
  for (auto _ : state) benchmark::DoNotOptimize(layer.project());
}
BENCHMARK(BM_ProjectWeight)->Arg(4)->Arg(8)->Arg(16);

void BM_LayerForward(benchmark::State& state) {
  const EquivariantLinear layer = make_layer(8, 32);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01;
  ad::Mat x(state.range(0), static_cast<Eigen::Index>(layer.layout_in().total_dim()));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n01(rng);
  for (auto _ : state) benchmark::DoNotOptimize(layer.forward(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LayerForward)->Arg(1)->Arg(256);

void BM_RegularAction(benchmark::State& state) {
  const ReprLayout layout(make_cyclic_group(8), {{RepKind::standard, 2}, {RepKind::regular, 32}});
  std::vector<double> v(layout.total_dim(), 0.5);
  Element g = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(act_on_vector(layout, g, v));
    g = (g + 1) % 8;
  }
}
BENCHMARK(BM_RegularAction);

}  // namespace
