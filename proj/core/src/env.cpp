#include "ecrl/env.hpp"

#include "ecrl/errors.hpp"

#include <cmath>
#include <numbers>

namespace ecrl {

namespace {

Eigen::Vector2d clamp_disk(Eigen::Vector2d p, double radius) {
  const double n = p.norm();
  if (n > radius) p *= radius / n;
  return p;
}

Eigen::Vector2d seg(const Vector& v, std::size_t offset) {
  return v.segment<2>(static_cast<Eigen::Index>(offset));
}

}  // namespace

std::string to_string(EnvKind k) { return k == EnvKind::reach2d ? "reach2d" : "push2d"; }

EnvKind parse_env_kind(std::string_view s) {
  if (s == "reach2d") return EnvKind::reach2d;
  if (s == "push2d") return EnvKind::push2d;
  throw ConfigError("unknown env kind '" + std::string(s) + "' (expected reach2d or push2d)");
}

void PlanarEnvSpec::validate() const {
  if (!(workspace_radius > 0)) throw ConfigError("env.workspace_radius must be positive");
  if (max_steps == 0) throw ConfigError("env.max_steps must be positive");
  if (!(success_radius > 0)) throw ConfigError("env.success_radius must be positive");
  if (!(action_scale > 0)) throw ConfigError("env.action_scale must be positive");
  if (!(noise_std >= 0)) throw ConfigError("env.noise_std must be non-negative");
  if (!(block_offset_min >= 0) || block_offset_max < block_offset_min)
    throw ConfigError("env.block_offset_min/max must satisfy 0 <= min <= max");
}

Vector uniform_disk(double radius, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = radius * std::sqrt(u(rng));
  const double theta = 2.0 * std::numbers::pi * u(rng);
  Vector p(2);
  p << r * std::cos(theta), r * std::sin(theta);
  return p;
}

PlanarEnv::PlanarEnv(PlanarEnvSpec spec) : spec_(spec) { spec_.validate(); }

SpaceBlocks PlanarEnv::blocks() const {
  const std::size_t positions = spec_.kind == EnvKind::reach2d ? 1 : 2;
  return {{{RepKind::standard, positions}}, {{RepKind::standard, 1}}, {{RepKind::standard, 1}}};
}

ReprLayout PlanarEnv::state_layout(const GroupPtr& group) const { return ReprLayout(group, blocks().state); }
ReprLayout PlanarEnv::action_layout(const GroupPtr& group) const { return ReprLayout(group, blocks().action); }
ReprLayout PlanarEnv::goal_layout(const GroupPtr& group) const { return ReprLayout(group, blocks().goal); }

PlanarEnv::Start PlanarEnv::reset(std::mt19937_64& rng) const {
  if (spec_.kind == EnvKind::reach2d) {
    Vector s = uniform_disk(spec_.workspace_radius, rng);
    Vector g = uniform_disk(spec_.workspace_radius, rng);
    while (is_success(s, g)) g = uniform_disk(spec_.workspace_radius, rng);
    return {s, g};
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Eigen::Vector2d agent = seg(uniform_disk(spec_.start_radius, rng), 0);
  const double r = spec_.block_offset_min + (spec_.block_offset_max - spec_.block_offset_min) * u(rng);
  const double theta = 2.0 * std::numbers::pi * u(rng);
  const Eigen::Vector2d block =
      clamp_disk(agent + r * Eigen::Vector2d(std::cos(theta), std::sin(theta)), spec_.workspace_radius);
  Vector s(4);
  s << agent, block;
  Vector goal;
  do {
    goal = clamp_disk(block + seg(uniform_disk(spec_.goal_offset, rng), 0), spec_.workspace_radius);
  } while (is_success(s, goal));
  return {s, goal};
}

Vector PlanarEnv::clamp_action(const Vector& action) const {
  if (action.size() != 2) throw ShapeError("action must have 2 entries");
  return clamp_disk(seg(action, 0), 1.0);
}

Vector PlanarEnv::random_action(std::mt19937_64& rng) const { return uniform_disk(1.0, rng); }

Vector PlanarEnv::achieved_goal(const Vector& state) const {
  if (static_cast<std::size_t>(state.size()) != state_dim()) throw ShapeError("state has the wrong length");
  return seg(state, goal_offset());
}

bool PlanarEnv::is_success(const Vector& state, const Vector& goal) const {
  return (achieved_goal(state) - goal).norm() <= spec_.success_radius;
}

PlanarEnv::StepResult PlanarEnv::step(const Vector& state, const Vector& action, const Vector& goal) const {
  return transition(state, action, goal, Vector::Zero(2));
}

PlanarEnv::StepResult PlanarEnv::step(const Vector& state, const Vector& action, const Vector& goal,
                                      std::mt19937_64& rng) const {
  Vector noise = Vector::Zero(2);
  if (spec_.noise_std > 0) {
    std::normal_distribution<double> normal(0.0, spec_.noise_std);
    noise(0) = normal(rng);
    noise(1) = normal(rng);
  }
  return transition(state, action, goal, noise);
}

PlanarEnv::StepResult PlanarEnv::transition(const Vector& state, const Vector& action, const Vector& goal,
                                            const Vector& noise) const {
  if (static_cast<std::size_t>(state.size()) != state_dim()) throw ShapeError("state has the wrong length");
  if (goal.size() != 2) throw ShapeError("goal must have 2 entries");
  const Eigen::Vector2d a = seg(clamp_action(action), 0);
  const Eigen::Vector2d agent =
      clamp_disk(seg(state, 0) + spec_.action_scale * a + seg(noise, 0), spec_.workspace_radius);
  Vector next(state.size());
  next.head<2>() = agent;
  if (spec_.kind == EnvKind::push2d) {
    Eigen::Vector2d block = seg(state, 2);
    const double contact = spec_.agent_radius + spec_.block_radius;
    const Eigen::Vector2d d = block - agent;
    const double dist = d.norm();
    if (dist < contact) {
      if (dist > 1e-12) {
        block = agent + d * (contact / dist);
      } else if (a.norm() > 0) {
        block = agent + a.normalized() * contact;
      }
      block = clamp_disk(block, spec_.workspace_radius);
    }
    next.segment<2>(2) = block;
  }
  return {next, is_success(next, goal)};
}

Vector PlanarEnv::scripted_action(const Vector& state, const Vector& goal) const {
  const Eigen::Vector2d agent = seg(state, 0);
  const double scale = spec_.action_scale;
  if (spec_.kind == EnvKind::reach2d) return clamp_disk((seg(goal, 0) - agent) / scale, 1.0);

  const Eigen::Vector2d block = seg(state, 2);
  Eigen::Vector2d to_goal = seg(goal, 0) - block;
  const double remaining = to_goal.norm();
  if (remaining < 1e-9) return Vector::Zero(2);
  const Eigen::Vector2d dir = to_goal / remaining;
  const double contact = spec_.agent_radius + spec_.block_radius;
  const Eigen::Vector2d behind = block - dir * (contact + 0.02);
  const Eigen::Vector2d rel = agent - block;
  const double along = rel.dot(dir);
  const Eigen::Vector2d lateral = rel - along * dir;

  // Pushing: agent sits behind the block and roughly on the push line.
  if (along < -0.5 * contact && lateral.norm() < 0.3 * contact) {
    const double push = std::min(remaining, scale) + contact;
    const Eigen::Vector2d target = block + dir * (push - contact) - dir * contact;
    return clamp_disk((target - agent) / scale + 0.05 * dir, 1.0);
  }
  // Go around: step sideways first if the block is in the way.
  if (along > -contact) {
    Eigen::Vector2d side = lateral.norm() > 1e-9 ? Eigen::Vector2d(lateral.normalized())
                                                 : Eigen::Vector2d(-dir.y(), dir.x());
    const Eigen::Vector2d waypoint = block + side * (contact + 0.05) - dir * (contact + 0.05);
    return clamp_disk((waypoint - agent) / scale, 1.0);
  }
  return clamp_disk((behind - agent) / scale, 1.0);
}

}  // namespace ecrl
