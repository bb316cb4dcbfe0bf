#pragma once

// Planar goal-conditioned tasks whose dynamics commute with rotations and
// reflections of the plane: a point-mass reacher and a disk pusher.

#include "ecrl/crl.hpp"
#include "ecrl/group.hpp"

#include <random>
#include <string>
#include <string_view>

namespace ecrl {

enum class EnvKind { reach2d, push2d };

std::string to_string(EnvKind k);
EnvKind parse_env_kind(std::string_view s);

struct PlanarEnvSpec {
  EnvKind kind = EnvKind::reach2d;
  /// Radius of the disk workspace; positions are clamped radially onto it.
  double workspace_radius = 1.0;
  std::size_t max_steps = 50;
  double success_radius = 0.1;
  double action_scale = 0.1;
  /// Std of isotropic Gaussian noise added to each agent displacement.
  double noise_std = 0.0;

  // push2d
  double agent_radius = 0.05;
  double block_radius = 0.1;
  double start_radius = 0.5;
  double block_offset_min = 0.2;
  double block_offset_max = 0.3;
  double goal_offset = 0.4;

  /// Validates the fields; throws ConfigError.
  void validate() const;
};

class PlanarEnv {
 public:
  explicit PlanarEnv(PlanarEnvSpec spec);

  const PlanarEnvSpec& spec() const noexcept { return spec_; }
  std::size_t state_dim() const noexcept { return spec_.kind == EnvKind::reach2d ? 2 : 4; }
  std::size_t action_dim() const noexcept { return 2; }
  std::size_t goal_dim() const noexcept { return 2; }
  /// Where the achieved goal sits inside the state vector.
  std::size_t goal_offset() const noexcept { return spec_.kind == EnvKind::reach2d ? 0 : 2; }

  SpaceBlocks blocks() const;
  ReprLayout state_layout(const GroupPtr& group) const;
  ReprLayout action_layout(const GroupPtr& group) const;
  ReprLayout goal_layout(const GroupPtr& group) const;

  struct Start {
    Vector state;
    Vector goal;
  };
  Start reset(std::mt19937_64& rng) const;

  struct StepResult {
    Vector next_state;
    bool success = false;
  };
  /// Deterministic transition (noise ignored).
  StepResult step(const Vector& state, const Vector& action, const Vector& goal) const;
  /// Transition with the configured displacement noise.
  StepResult step(const Vector& state, const Vector& action, const Vector& goal, std::mt19937_64& rng) const;

  Vector achieved_goal(const Vector& state) const;
  bool is_success(const Vector& state, const Vector& goal) const;
  /// Radial clamp onto the unit disk.
  Vector clamp_action(const Vector& action) const;
  /// Uniform over the unit action disk.
  Vector random_action(std::mt19937_64& rng) const;
  /// Hand-written controller that solves the task.
  Vector scripted_action(const Vector& state, const Vector& goal) const;

 private:
  StepResult transition(const Vector& state, const Vector& action, const Vector& goal, const Vector& noise) const;

  PlanarEnvSpec spec_;
};

/// Uniform sample from the disk of the given radius.
Vector uniform_disk(double radius, std::mt19937_64& rng);

}  // namespace ecrl
