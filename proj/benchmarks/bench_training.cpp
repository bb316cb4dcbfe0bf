#include "ecrl/training.hpp"

#include <benchmark/benchmark.h>

using namespace ecrl;

namespace {

TrainConfig bench_config(Variant v) {
  TrainConfig c;
  c.env.kind = EnvKind::push2d;
  c.net.variant = v;
  return c;
}

void BM_TrainStep(benchmark::State& state) {
  const TrainConfig c = bench_config(static_cast<Variant>(state.range(0)));
  const PlanarEnv env(c.env);
  Agent agent(c, env);
  ReplayBuffer buffer(100000, env.goal_offset(), env.goal_dim());
  Collector collector(env, 1);
  collector.collect(buffer, random_policy(env), 5000);
  std::mt19937_64 rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(train_step(agent, buffer, c, rng));
  state.SetLabel(to_string(c.net.variant));
}
BENCHMARK(BM_TrainStep)
    ->Arg(static_cast<int>(Variant::ecrl))
    ->Arg(static_cast<int>(Variant::crl))
    ->Arg(static_cast<int>(Variant::pooled))
    ->Unit(benchmark::kMillisecond);

void BM_SampleContrastive(benchmark::State& state) {
  const PlanarEnv env(PlanarEnvSpec{.kind = EnvKind::push2d});
  ReplayBuffer buffer(100000, env.goal_offset(), env.goal_dim());
  Collector collector(env, 3);
  collector.collect(buffer, random_policy(env), 20000);
  std::mt19937_64 rng(4);
  for (auto _ : state) benchmark::DoNotOptimize(buffer.sample_contrastive(256, 0.99, rng));
}
BENCHMARK(BM_SampleContrastive);

void BM_EnvStep(benchmark::State& state) {
  const PlanarEnv env(PlanarEnvSpec{.kind = EnvKind::push2d});
  std::mt19937_64 rng(5);
  const auto start = env.reset(rng);
  Vector s = start.state;
  const Vector a = env.random_action(rng);
  for (auto _ : state) {
    auto r = env.step(s, a, start.goal);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_EnvStep);

}  // namespace
