#include "ecrl/env.hpp"
#include "ecrl/errors.hpp"
#include "ecrl/training.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace ecrl;

namespace {

PlanarEnvSpec spec_for(EnvKind k) {
  PlanarEnvSpec s;
  s.kind = k;
  return s;
}

Vector rot(const Vector& v, const oracle::Mat& r) {
  return oracle::rotate_pairs(v, 0, static_cast<std::size_t>(v.size()) / 2, r);
}

}  // namespace

TEST(Env, Dimensions) {
  const PlanarEnv reach(spec_for(EnvKind::reach2d)), push(spec_for(EnvKind::push2d));
  EXPECT_EQ(reach.state_dim(), 2u);
  EXPECT_EQ(push.state_dim(), 4u);
  EXPECT_EQ(push.goal_offset(), 2u);
  EXPECT_EQ(push.state_layout(make_cyclic_group(8)).count(RepKind::standard), 2u);
  EXPECT_EQ(parse_env_kind("push2d"), EnvKind::push2d);
  EXPECT_THROW(parse_env_kind("maze"), ConfigError);
}

TEST(Env, SpecValidation) {
  PlanarEnvSpec s;
  s.success_radius = 0;
  EXPECT_THROW(PlanarEnv{s}, ConfigError);
  s = {};
  s.block_offset_min = 0.5;
  s.block_offset_max = 0.1;
  EXPECT_THROW(PlanarEnv{s}, ConfigError);
}

TEST(Env, DynamicsCommuteWithDihedralGroup) {
  for (EnvKind k : {EnvKind::reach2d, EnvKind::push2d}) {
    const PlanarEnv env(spec_for(k));
    std::mt19937_64 rng(1);
    double worst = 0;
    for (int i = 0; i < 300; ++i) {
      auto start = env.reset(rng);
      Vector state = start.state;
      // drive into contact and across the boundary sometimes
      if (k == EnvKind::push2d && i % 3 == 0) state.tail(2) = state.head(2) + Vector::Constant(2, 0.05);
      if (i % 5 == 0) state.head(2) *= 1.9;
      const Vector a = standard_normal(2, 1, rng).col(0) * 1.5;
      const auto next = env.step(state, a, start.goal);
      for (std::size_t g = 0; g < 16; ++g) {
        const oracle::Mat r = oracle::rho1(8, true, g);
        const auto moved = env.step(rot(state, r), rot(a, r), rot(start.goal, r));
        worst = std::max(worst, (moved.next_state - rot(next.next_state, r)).cwiseAbs().maxCoeff());
        EXPECT_EQ(moved.success, next.success);
      }
    }
    EXPECT_LT(worst, 1e-12) << to_string(k);
  }
}

TEST(Env, ReachStepsAndClamps) {
  const PlanarEnv env(spec_for(EnvKind::reach2d));
  Vector s(2), a(2), g(2);
  s << 0.1, 0.2;
  a << 0.3, -0.4;
  g << 0.5, 0.5;
  const auto r = env.step(s, a, g);
  EXPECT_NEAR(r.next_state(0), 0.13, 1e-15);
  EXPECT_NEAR(r.next_state(1), 0.16, 1e-15);
  a << 3.0, 4.0;
  EXPECT_NEAR(env.clamp_action(a).norm(), 1.0, 1e-15);
  s << 0.99, 0.0;
  a << 1.0, 0.0;
  EXPECT_NEAR(env.step(s, a, g).next_state.norm(), 1.0, 1e-15);
}

TEST(Env, SuccessRadius) {
  const PlanarEnv env(spec_for(EnvKind::reach2d));
  Vector s(2), g(2);
  s << 0.0, 0.0;
  g << 0.1, 0.0;
  EXPECT_TRUE(env.is_success(s, g));
  g << 0.1 + 1e-9, 0.0;
  EXPECT_FALSE(env.is_success(s, g));
}

TEST(Env, PushMovesBlockOnlyOnContact) {
  const PlanarEnv env(spec_for(EnvKind::push2d));
  Vector s(4), a(2), g(2);
  g << 0.5, 0.5;
  s << 0.0, 0.0, 0.5, 0.0;
  a << 1.0, 0.0;
  auto r = env.step(s, a, g);
  EXPECT_EQ(r.next_state.tail(2), s.tail(2));
  s << 0.0, 0.0, 0.16, 0.0;
  r = env.step(s, a, g);
  EXPECT_NEAR(r.next_state(2), 0.1 + 0.15, 1e-12);
  EXPECT_NEAR(r.next_state(3), 0.0, 1e-12);
  // success uses the block position only
  EXPECT_TRUE(env.is_success(s, Vector(s.tail(2))));
}

TEST(Env, ResetSamplesInsideWorkspace) {
  for (EnvKind k : {EnvKind::reach2d, EnvKind::push2d}) {
    const PlanarEnv env(spec_for(k));
    std::mt19937_64 rng(2);
    for (int i = 0; i < 500; ++i) {
      const auto st = env.reset(rng);
      EXPECT_LE(st.state.head(2).norm(), 1.0);
      EXPECT_LE(st.goal.norm(), 1.0);
      EXPECT_FALSE(env.is_success(st.state, st.goal));
    }
  }
}

TEST(Env, NoiseIsSeeded) {
  PlanarEnvSpec s = spec_for(EnvKind::reach2d);
  s.noise_std = 0.05;
  const PlanarEnv env(s);
  Vector x = Vector::Zero(2), a = Vector::Zero(2), g = Vector::Ones(2) * 0.5;
  std::mt19937_64 r1(3), r2(3);
  EXPECT_EQ(env.step(x, a, g, r1).next_state, env.step(x, a, g, r2).next_state);
  EXPECT_NE(env.step(x, a, g, r1).next_state, Vector::Zero(2));
}

TEST(Env, ScriptedControllerSolvesTasks) {
  for (EnvKind k : {EnvKind::reach2d, EnvKind::push2d}) {
    const PlanarEnv env(spec_for(k));
    std::mt19937_64 rng(4);
    const double rate = evaluate(scripted_policy(env, 0.0), env, 100, rng);
    EXPECT_GE(rate, k == EnvKind::reach2d ? 1.0 : 0.8) << to_string(k);
  }
}
