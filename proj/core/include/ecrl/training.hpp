#pragma once

// Agent state, online and offline training loops, evaluation and metrics.

#include "ecrl/adam.hpp"
#include "ecrl/crl.hpp"
#include "ecrl/env.hpp"
#include "ecrl/replay.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace ecrl {

enum class Relabel { future, final };

std::string to_string(Relabel r);
Relabel parse_relabel(std::string_view s);

struct TrainConfig {
  PlanarEnvSpec env;
  NetworkConfig net;
  ContrastiveLoss loss = ContrastiveLoss::bce;

  std::size_t batch_size = 256;
  double gamma = 0.99;
  double learning_rate = 3e-4;
  std::size_t total_env_steps = 100000;
  std::size_t warmup_steps = 10000;
  std::size_t train_collect_interval = 16;
  std::size_t updates_per_interval = 1;
  std::size_t replay_capacity = 1000000;
  std::size_t eval_interval = 2000;
  std::size_t eval_goals = 50;
  /// Stop once an evaluation reaches this success rate; 0 disables.
  double stop_success = 0.0;
  std::uint64_t seed = 0;

  double alpha_init = 1.0;
  bool auto_alpha = true;
  double target_entropy = 0.0;

  double offline_lambda = 0.25;
  Relabel offline_relabel = Relabel::future;
  std::size_t offline_gradient_steps = 20000;
  std::size_t offline_eval_interval = 1000;
  std::size_t offline_eval_goals = 100;

  /// Record real elapsed time in the CSV (otherwise the column is 0).
  bool wall_clock = false;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

class Agent {
 public:
  Agent(const TrainConfig& config, const PlanarEnv& env);

  Critic critic;
  Actor actor;
  Parameter log_alpha;
  AdamState critic_opt;
  AdamState actor_opt;
  AdamState alpha_opt;

  double alpha() const { return std::exp(log_alpha.value(0, 0)); }
};

struct StepMetrics {
  bool skipped = false;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double alpha = 0.0;
  double entropy = 0.0;
};

/// One critic update then one actor update (and temperature update) on a
/// fresh batch. Skips with a diagnostic when the buffer holds fewer than B
/// transitions.
StepMetrics train_step(Agent& agent, const ReplayBuffer& buffer, const TrainConfig& config, std::mt19937_64& rng);
/// Offline variant: goals for the actor are the relabelled batch goals and
/// the actor objective adds the behaviour-cloning term.
StepMetrics offline_train_step(Agent& agent, const ReplayBuffer& buffer, const TrainConfig& config,
                               std::mt19937_64& rng);
/// The updates of train_step on a given batch and actor goals.
StepMetrics update_on_batch(Agent& agent, const ContrastiveBatch& batch, const ad::Mat& actor_goals,
                            const TrainConfig& config, std::mt19937_64& rng);
/// Contrastive loss of the current critic on a batch, without updating.
double critic_loss_value(const Agent& agent, const ContrastiveBatch& batch, ContrastiveLoss kind);

using PolicyFn = std::function<Vector(const Vector& state, const Vector& goal, std::mt19937_64& rng)>;

PolicyFn mean_policy(const ActorPolicy& policy);
PolicyFn random_policy(const PlanarEnv& env);
/// Scripted controller plus isotropic Gaussian action noise.
PolicyFn scripted_policy(const PlanarEnv& env, double noise_std);

/// Rolls episodes into a buffer, one environment step at a time.
class Collector {
 public:
  Collector(const PlanarEnv& env, std::uint64_t seed);

  /// Takes n environment steps with `policy`, appending every transition.
  void collect(ReplayBuffer& buffer, const PolicyFn& policy, std::size_t n_steps);
  std::size_t env_steps() const noexcept { return env_steps_; }
  std::size_t episodes_finished() const noexcept { return episodes_; }

 private:
  const PlanarEnv& env_;
  std::mt19937_64 rng_;
  Vector state_;
  Vector goal_;
  std::size_t t_ = 0;
  bool open_ = false;
  std::size_t env_steps_ = 0;
  std::size_t episodes_ = 0;
};

/// Runs one episode from `start`; success if the goal was ever reached.
bool rollout_success(const PolicyFn& policy, const PlanarEnv& env, const PlanarEnv::Start& start,
                     std::mt19937_64& rng);
/// Fraction of successful episodes from the given starts.
double evaluate(const PolicyFn& policy, const PlanarEnv& env, const std::vector<PlanarEnv::Start>& starts,
                std::mt19937_64& rng);
/// Fraction of successful episodes over n freshly sampled (start, goal) pairs.
double evaluate(const PolicyFn& policy, const PlanarEnv& env, std::size_t n_goals, std::mt19937_64& rng);
/// Mean-mode evaluation of the agent's actor.
double evaluate(const Agent& agent, const PlanarEnv& env, std::size_t n_goals, std::mt19937_64& rng);

/// Episodes of n policy rollouts, for dataset export.
std::vector<Episode> record_episodes(const PolicyFn& policy, const PlanarEnv& env, std::size_t n_episodes,
                                     std::mt19937_64& rng);

struct MetricsRecord {
  std::size_t env_steps = 0;
  double success_rate = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double wall_secs = 0.0;
};

class MetricsLog {
 public:
  static constexpr const char* kHeader = "env_steps,success_rate,critic_loss,actor_loss,wall_secs";

  /// Throws ContractError if env_steps does not increase.
  void add(const MetricsRecord& record);
  const std::vector<MetricsRecord>& records() const noexcept { return records_; }
  bool empty() const noexcept { return records_.empty(); }
  double best_success() const;
  double final_success() const;

  void write_csv(std::ostream& out) const;
  std::string csv() const;

 private:
  std::vector<MetricsRecord> records_;
};

struct RunResult {
  MetricsLog log;
  std::unique_ptr<Agent> agent;
  std::size_t env_steps = 0;
  std::size_t updates = 0;
  double wall_secs = 0.0;
  bool stopped_early = false;
};

using ProgressFn = std::function<void(const MetricsRecord&)>;

/// Warmup with random actions, then alternate collection and updates.
RunResult run_online(const TrainConfig& config, const ProgressFn& progress = {});
/// Gradient steps on a fixed buffer; the env_steps column counts gradient steps.
RunResult run_offline(const TrainConfig& config, const ReplayBuffer& dataset, const ProgressFn& progress = {});

/// Checkpoint JSON with every parameter by name and the run's config text.
std::string checkpoint_json(Agent& agent, const std::string& config_text);
void save_checkpoint(Agent& agent, const std::string& path, const std::string& config_text);
/// Loads parameters into a compatible agent; returns the stored config text.
std::string load_checkpoint(Agent& agent, const std::string& path);
/// Config text stored in a checkpoint file.
std::string checkpoint_config(const std::string& path);

}  // namespace ecrl
