#include "ecrl/training.hpp"

#include "ecrl/errors.hpp"
#include "ecrl/seed.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

namespace ecrl {

namespace {

enum Stream : std::uint64_t { kInit = 11, kCollect = 12, kTrain = 13, kEval = 1000 };

std::vector<ad::Mat> grads_of(const ParamBinder& bind, const std::vector<Parameter*>& params) {
  return bind.gradients(params);
}

double mean_or_nan(double total, std::size_t count) {
  return count == 0 ? std::numeric_limits<double>::quiet_NaN() : total / static_cast<double>(count);
}

StepMetrics update_impl(Agent& agent, const ContrastiveBatch& batch, const ad::Mat& actor_goals,
                        const TrainConfig& config, std::mt19937_64& rng, bool offline) {
  StepMetrics m;
  {
    ad::Tape tape;
    ParamBinder bind(tape);
    ad::Var loss = critic_loss(bind, agent.critic, batch, config.loss);
    tape.backward(loss);
    const auto params = agent.critic.parameters();
    agent.critic_opt.step(params, grads_of(bind, params));
    m.critic_loss = loss.item();
  }
  const ad::Mat noise = standard_normal(batch.size(), static_cast<Eigen::Index>(agent.actor.action_dim()), rng);
  {
    ad::Tape tape;
    ParamBinder actor_bind(tape);
    ParamBinder critic_bind(tape, false);
    ad::Var loss;
    if (offline) {
      loss = offline_actor_loss(actor_bind, critic_bind, agent.actor, agent.critic, batch.states, batch.actions,
                                actor_goals, config.offline_lambda, noise);
    } else {
      const auto terms = actor_loss(actor_bind, critic_bind, agent.actor, agent.critic, batch.states, actor_goals,
                                    agent.alpha(), noise);
      loss = terms.loss;
      m.entropy = -terms.log_prob.value().mean();
    }
    tape.backward(loss);
    const auto params = agent.actor.parameters();
    agent.actor_opt.step(params, grads_of(actor_bind, params));
    m.actor_loss = loss.item();
  }
  if (!offline && config.auto_alpha) {
    // d/d log_alpha of alpha * (entropy - target)
    Parameter* p = &agent.log_alpha;
    const ad::Mat g = ad::Mat::Constant(1, 1, agent.alpha() * (m.entropy - config.target_entropy));
    agent.alpha_opt.step(std::span<Parameter* const>(&p, 1), std::span<const ad::Mat>(&g, 1));
  }
  m.alpha = agent.alpha();
  return m;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::vector<PlanarEnv::Start> sample_starts(const PlanarEnv& env, std::size_t n, std::mt19937_64& rng) {
  std::vector<PlanarEnv::Start> starts;
  starts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) starts.push_back(env.reset(rng));
  return starts;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::string to_string(Relabel r) { return r == Relabel::future ? "future" : "final"; }

Relabel parse_relabel(std::string_view s) {
  if (s == "future") return Relabel::future;
  if (s == "final") return Relabel::final;
  throw ConfigError("unknown relabel mode '" + std::string(s) + "' (expected future or final)");
}

void TrainConfig::validate() const {
  env.validate();
  auto positive = [](std::size_t v, const char* key) {
    if (v == 0) throw ConfigError(std::string(key) + " must be positive");
  };
  positive(batch_size, "train.batch_size");
  if (batch_size < 2) throw ConfigError("train.batch_size must be at least 2 for in-batch negatives");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("train.gamma must lie in [0, 1)");
  if (!(learning_rate > 0)) throw ConfigError("train.lr must be positive");
  positive(total_env_steps, "train.total_env_steps");
  positive(train_collect_interval, "train.train_collect_interval");
  positive(replay_capacity, "train.replay_capacity");
  positive(eval_interval, "train.eval_interval");
  positive(eval_goals, "train.eval_goals");
  if (stop_success < 0 || stop_success > 1) throw ConfigError("train.stop_success must lie in [0, 1]");
  if (!(alpha_init > 0)) throw ConfigError("entropy.alpha_init must be positive");
  if (offline_lambda < 0) throw ConfigError("offline.lambda must be non-negative");
  positive(offline_gradient_steps, "offline.gradient_steps");
  positive(offline_eval_interval, "offline.eval_interval");
  positive(offline_eval_goals, "offline.eval_goals");
  positive(net.repr_k, "agent.repr_k");
  positive(net.repr_dim_plain, "agent.repr_dim_plain");
  positive(net.hidden_blocks, "agent.hidden_blocks");
  positive(net.hidden_width_plain, "agent.hidden_width_plain");
  if (net.min_log_std > net.max_log_std) throw ConfigError("agent.min_log_std exceeds agent.max_log_std");
}

Agent::Agent(const TrainConfig& config, const PlanarEnv& env)
    : critic(config.net, env.blocks(), derive_seed(config.seed, kInit)),
      actor(config.net, env.blocks(), derive_seed(config.seed, kInit + 100)),
      log_alpha{"log_alpha", ad::Mat::Constant(1, 1, std::log(config.alpha_init))},
      critic_opt(AdamHyper{config.learning_rate}),
      actor_opt(AdamHyper{config.learning_rate}),
      alpha_opt(AdamHyper{config.learning_rate}) {}

StepMetrics update_on_batch(Agent& agent, const ContrastiveBatch& batch, const ad::Mat& actor_goals,
                            const TrainConfig& config, std::mt19937_64& rng) {
  return update_impl(agent, batch, actor_goals, config, rng, false);
}

double critic_loss_value(const Agent& agent, const ContrastiveBatch& batch, ContrastiveLoss kind) {
  ad::Tape tape;
  ParamBinder bind(tape, false);
  return critic_loss(bind, agent.critic, batch, kind).item();
}

StepMetrics train_step(Agent& agent, const ReplayBuffer& buffer, const TrainConfig& config, std::mt19937_64& rng) {
  if (buffer.size() < config.batch_size) return {.skipped = true};
  const ContrastiveBatch batch = buffer.sample_contrastive(config.batch_size, config.gamma, rng);
  const ad::Mat goals = buffer.random_goals(config.batch_size, rng);
  return update_impl(agent, batch, goals, config, rng, false);
}

StepMetrics offline_train_step(Agent& agent, const ReplayBuffer& buffer, const TrainConfig& config,
                               std::mt19937_64& rng) {
  if (buffer.size() < 2) return {.skipped = true};
  const ContrastiveBatch batch = config.offline_relabel == Relabel::future
                                     ? buffer.sample_contrastive(config.batch_size, config.gamma, rng)
                                     : buffer.sample_final_goal(config.batch_size, rng);
  return update_impl(agent, batch, batch.goals, config, rng, true);
}

PolicyFn mean_policy(const ActorPolicy& policy) {
  return [policy](const Vector& s, const Vector& g, std::mt19937_64& rng) {
    return policy.act(s, g, ActorPolicy::Mode::mean, rng);
  };
}

PolicyFn random_policy(const PlanarEnv& env) {
  return [&env](const Vector&, const Vector&, std::mt19937_64& rng) { return env.random_action(rng); };
}

PolicyFn scripted_policy(const PlanarEnv& env, double noise_std) {
  return [&env, noise_std](const Vector& s, const Vector& g, std::mt19937_64& rng) {
    Vector a = env.scripted_action(s, g);
    if (noise_std > 0) {
      std::normal_distribution<double> normal(0.0, noise_std);
      for (Eigen::Index i = 0; i < a.size(); ++i) a(i) += normal(rng);
    }
    return env.clamp_action(a);
  };
}

Collector::Collector(const PlanarEnv& env, std::uint64_t seed) : env_(env), rng_(seed) {}

void Collector::collect(ReplayBuffer& buffer, const PolicyFn& policy, std::size_t n_steps) {
  for (std::size_t i = 0; i < n_steps; ++i) {
    if (!open_) {
      const auto start = env_.reset(rng_);
      state_ = start.state;
      goal_ = start.goal;
      t_ = 0;
      open_ = true;
      buffer.begin_episode(state_);
    }
    const Vector action = env_.clamp_action(policy(state_, goal_, rng_));
    const auto result = env_.step(state_, action, goal_, rng_);
    buffer.add(action, result.next_state, result.success);
    state_ = result.next_state;
    ++t_;
    ++env_steps_;
    if (t_ >= env_.spec().max_steps) {
      buffer.end_episode();
      open_ = false;
      ++episodes_;
    }
  }
}

bool rollout_success(const PolicyFn& policy, const PlanarEnv& env, const PlanarEnv::Start& start,
                     std::mt19937_64& rng) {
  Vector s = start.state;
  if (env.is_success(s, start.goal)) return true;
  for (std::size_t t = 0; t < env.spec().max_steps; ++t) {
    const auto result = env.step(s, policy(s, start.goal, rng), start.goal, rng);
    if (result.success) return true;
    s = result.next_state;
  }
  return false;
}

double evaluate(const PolicyFn& policy, const PlanarEnv& env, const std::vector<PlanarEnv::Start>& starts,
                std::mt19937_64& rng) {
  if (starts.empty()) throw ContractError("evaluation needs at least one goal");
  std::size_t wins = 0;
  for (const auto& start : starts) wins += rollout_success(policy, env, start, rng) ? 1 : 0;
  return static_cast<double>(wins) / static_cast<double>(starts.size());
}

double evaluate(const PolicyFn& policy, const PlanarEnv& env, std::size_t n_goals, std::mt19937_64& rng) {
  if (n_goals == 0) throw ContractError("evaluation needs at least one goal");
  const auto starts = sample_starts(env, n_goals, rng);
  return evaluate(policy, env, starts, rng);
}

double evaluate(const Agent& agent, const PlanarEnv& env, std::size_t n_goals, std::mt19937_64& rng) {
  return evaluate(mean_policy(agent.actor.freeze()), env, n_goals, rng);
}

std::vector<Episode> record_episodes(const PolicyFn& policy, const PlanarEnv& env, std::size_t n_episodes,
                                     std::mt19937_64& rng) {
  std::vector<Episode> out;
  for (std::size_t e = 0; e < n_episodes; ++e) {
    const auto start = env.reset(rng);
    Episode ep;
    ep.id = e;
    ep.states.push_back(start.state);
    for (std::size_t t = 0; t < env.spec().max_steps; ++t) {
      const Vector action = env.clamp_action(policy(ep.states.back(), start.goal, rng));
      const auto result = env.step(ep.states.back(), action, start.goal, rng);
      ep.actions.push_back(action);
      ep.states.push_back(result.next_state);
      ep.success.push_back(result.success);
    }
    out.push_back(std::move(ep));
  }
  return out;
}

void MetricsLog::add(const MetricsRecord& record) {
  if (!records_.empty() && record.env_steps <= records_.back().env_steps)
    throw ContractError("metrics env_steps must increase");
  records_.push_back(record);
}

double MetricsLog::best_success() const {
  double best = 0.0;
  for (const auto& r : records_) best = std::max(best, r.success_rate);
  return best;
}

double MetricsLog::final_success() const { return records_.empty() ? 0.0 : records_.back().success_rate; }

void MetricsLog::write_csv(std::ostream& out) const {
  out << kHeader << '\n';
  for (const auto& r : records_) {
    out << r.env_steps << ',' << format_double(r.success_rate) << ',' << format_double(r.critic_loss) << ','
        << format_double(r.actor_loss) << ',' << format_double(r.wall_secs) << '\n';
  }
}

std::string MetricsLog::csv() const {
  std::ostringstream out;
  write_csv(out);
  return out.str();
}

RunResult run_online(const TrainConfig& config, const ProgressFn& progress) {
  config.validate();
  const auto t0 = Clock::now();
  const PlanarEnv env(config.env);
  RunResult result;
  result.agent = std::make_unique<Agent>(config, env);
  Agent& agent = *result.agent;
  ReplayBuffer buffer(config.replay_capacity, env.goal_offset(), env.goal_dim());
  Collector collector(env, derive_seed(config.seed, kCollect));
  std::mt19937_64 train_rng(derive_seed(config.seed, kTrain));

  const PolicyFn random = random_policy(env);
  ActorPolicy snapshot = agent.actor.freeze();
  PolicyFn sampler = [&snapshot](const Vector& s, const Vector& g, std::mt19937_64& rng) {
    return snapshot.act(s, g, ActorPolicy::Mode::sample, rng);
  };

  double critic_total = 0.0, actor_total = 0.0;
  std::size_t loss_count = 0;
  std::size_t next_eval = config.eval_interval;
  std::size_t eval_index = 0;

  std::size_t pending = 0;  // post-warmup steps since the last update round
  while (collector.env_steps() < config.total_env_steps) {
    const std::size_t done = collector.env_steps();
    const bool warm = done < config.warmup_steps;
    std::size_t chunk = warm ? config.warmup_steps - done : config.train_collect_interval - pending;
    chunk = std::min({chunk, config.total_env_steps - done, next_eval - done});
    collector.collect(buffer, warm ? random : sampler, chunk);
    if (!warm) pending += chunk;

    if (collector.env_steps() == config.warmup_steps || pending >= config.train_collect_interval) {
      pending = 0;
      for (std::size_t u = 0; u < config.updates_per_interval; ++u) {
        const StepMetrics m = train_step(agent, buffer, config, train_rng);
        if (m.skipped) continue;
        critic_total += m.critic_loss;
        actor_total += m.actor_loss;
        ++loss_count;
        ++result.updates;
      }
      snapshot = agent.actor.freeze();
    }

    const std::size_t steps = collector.env_steps();
    if (steps >= next_eval || steps >= config.total_env_steps) {
      std::mt19937_64 eval_rng(derive_seed(config.seed, kEval + eval_index++));
      MetricsRecord rec;
      rec.env_steps = steps;
      rec.success_rate = evaluate(mean_policy(agent.actor.freeze()), env, config.eval_goals, eval_rng);
      rec.critic_loss = mean_or_nan(critic_total, loss_count);
      rec.actor_loss = mean_or_nan(actor_total, loss_count);
      rec.wall_secs = config.wall_clock ? seconds_since(t0) : 0.0;
      critic_total = actor_total = 0.0;
      loss_count = 0;
      result.log.add(rec);
      if (progress) progress(rec);
      next_eval += config.eval_interval;
      if (config.stop_success > 0 && rec.success_rate >= config.stop_success) {
        result.stopped_early = true;
        break;
      }
    }
  }
  result.env_steps = collector.env_steps();
  result.wall_secs = seconds_since(t0);
  return result;
}

RunResult run_offline(const TrainConfig& config, const ReplayBuffer& dataset, const ProgressFn& progress) {
  config.validate();
  if (dataset.empty()) throw EmptyBufferError("offline dataset is empty");
  const auto t0 = Clock::now();
  const PlanarEnv env(config.env);
  RunResult result;
  result.agent = std::make_unique<Agent>(config, env);
  Agent& agent = *result.agent;
  std::mt19937_64 train_rng(derive_seed(config.seed, kTrain));

  double critic_total = 0.0, actor_total = 0.0;
  std::size_t loss_count = 0;
  std::size_t eval_index = 0;
  for (std::size_t step = 1; step <= config.offline_gradient_steps; ++step) {
    const StepMetrics m = offline_train_step(agent, dataset, config, train_rng);
    if (!m.skipped) {
      critic_total += m.critic_loss;
      actor_total += m.actor_loss;
      ++loss_count;
      ++result.updates;
    }
    if (step % config.offline_eval_interval == 0 || step == config.offline_gradient_steps) {
      std::mt19937_64 eval_rng(derive_seed(config.seed, kEval + eval_index++));
      MetricsRecord rec;
      rec.env_steps = step;
      rec.success_rate = evaluate(mean_policy(agent.actor.freeze()), env, config.offline_eval_goals, eval_rng);
      rec.critic_loss = mean_or_nan(critic_total, loss_count);
      rec.actor_loss = mean_or_nan(actor_total, loss_count);
      rec.wall_secs = config.wall_clock ? seconds_since(t0) : 0.0;
      critic_total = actor_total = 0.0;
      loss_count = 0;
      result.log.add(rec);
      if (progress) progress(rec);
    }
  }
  result.env_steps = 0;
  result.wall_secs = seconds_since(t0);
  return result;
}

namespace {

using nlohmann::json;

json param_json(const Parameter& p) {
  json data = json::array();
  for (Eigen::Index i = 0; i < p.value.rows(); ++i)
    for (Eigen::Index j = 0; j < p.value.cols(); ++j) data.push_back(p.value(i, j));
  return {{"rows", p.value.rows()}, {"cols", p.value.cols()}, {"data", data}};
}

std::vector<Parameter*> all_parameters(Agent& agent) {
  auto params = agent.critic.parameters();
  for (Parameter* p : agent.actor.parameters()) params.push_back(p);
  params.push_back(&agent.log_alpha);
  return params;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("checkpoint '" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace

std::string checkpoint_json(Agent& agent, const std::string& config_text) {
  json params = json::object();
  for (const Parameter* p : all_parameters(agent)) params[p->name] = param_json(*p);
  json doc = {{"format", "ecrl-checkpoint-1"},
              {"config", config_text},
              {"critic_steps", agent.critic_opt.step_count()},
              {"actor_steps", agent.actor_opt.step_count()},
              {"parameters", params}};
  return doc.dump(1);
}

void save_checkpoint(Agent& agent, const std::string& path, const std::string& config_text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << checkpoint_json(agent, config_text) << '\n';
}

std::string load_checkpoint(Agent& agent, const std::string& path) {
  const json doc = read_json(path);
  const json& params = doc.at("parameters");
  for (Parameter* p : all_parameters(agent)) {
    const auto it = params.find(p->name);
    if (it == params.end()) throw ShapeError("checkpoint is missing parameter " + p->name);
    const auto rows = it->at("rows").get<Eigen::Index>();
    const auto cols = it->at("cols").get<Eigen::Index>();
    if (rows != p->value.rows() || cols != p->value.cols())
      throw ShapeError("checkpoint parameter " + p->name + " has shape " + std::to_string(rows) + "x" +
                       std::to_string(cols) + ", expected " + std::to_string(p->value.rows()) + "x" +
                       std::to_string(p->value.cols()));
    const json& data = it->at("data");
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) p->value(i, j) = data.at(static_cast<std::size_t>(i * cols + j));
  }
  return doc.value("config", std::string());
}

std::string checkpoint_config(const std::string& path) { return read_json(path).value("config", std::string()); }

}  // namespace ecrl
