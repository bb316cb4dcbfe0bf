#include "ecrl_cli/commands.hpp"

#include "ecrl/dataset.hpp"
#include "ecrl/errors.hpp"
#include "ecrl/seed.hpp"
#include "ecrl/tabular.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace ecrl::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path + "'");
  f << content;
}

json config_json(const Config& config) {
  json obj = json::object();
  for (const auto& info : config_keys()) obj[info.key] = config.get(info.key);
  return obj;
}

void print_record(std::ostream& out, const MetricsRecord& r, const char* step_name) {
  char line[160];
  std::snprintf(line, sizeof line, "%s=%zu success=%.3f critic_loss=%.4f actor_loss=%.4f\n", step_name, r.env_steps,
                r.success_rate, r.critic_loss, r.actor_loss);
  out << line << std::flush;
}

void write_outputs(const RunManifest& m, const Config& config, const RunResult& result, const char* command) {
  fs::create_directories(m.directory);
  write_file(m.metrics_csv, result.log.csv());
  save_checkpoint(*result.agent, m.checkpoint, config.text());
  json summary = {{"run_id", m.run_id},
                  {"command", command},
                  {"seed", std::stoull(config.get("train.seed"))},
                  {"env", config.get("env.kind")},
                  {"variant", config.get("agent.variant")},
                  {"final_success", result.log.final_success()},
                  {"best_success", result.log.best_success()},
                  {"env_steps", result.env_steps},
                  {"updates", result.updates},
                  {"stopped_early", result.stopped_early},
                  {"wall_secs", result.wall_secs},
                  {"config", config_json(config)},
                  {"config_text", config.text()},
                  {"artifacts",
                   {{"metrics_csv", m.metrics_csv}, {"summary_json", m.summary_json}, {"checkpoint", m.checkpoint}}}};
  write_file(m.summary_json, summary.dump(2) + "\n");
  write_file((fs::path(m.directory) / "config.txt").string(), config.text());
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace

Config resolve_config(const RunOptions& options, const std::string& fallback) {
  Config config = Config::load(options.config.value_or(fallback));
  for (const auto& o : options.overrides) config.apply_override(o);
  if (options.variant) config.set("agent.variant", *options.variant);
  if (options.seed) config.set("train.seed", std::to_string(*options.seed));
  config.train_config();
  return config;
}

RunManifest make_manifest(const Config& config, const std::string& out_dir, const std::string& prefix) {
  RunManifest m;
  m.run_id = prefix + config.run_id();
  m.directory = (fs::path(out_dir) / m.run_id).string();
  m.metrics_csv = (fs::path(m.directory) / "metrics.csv").string();
  m.summary_json = (fs::path(m.directory) / "summary.json").string();
  m.checkpoint = (fs::path(m.directory) / "checkpoint.json").string();
  return m;
}

int cmd_train(const RunOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const Config config = resolve_config(options);
    const TrainConfig tc = config.train_config();
    const RunManifest m = make_manifest(config, options.out_dir);
    if (!options.quiet) out << "run " << m.run_id << '\n';
    const RunResult result = run_online(tc, [&](const MetricsRecord& r) {
      if (!options.quiet) print_record(out, r, "env_steps");
    });
    write_outputs(m, config, result, "train");
    out << "best_success=" << result.log.best_success() << " final_success=" << result.log.final_success()
        << " dir=" << m.directory << '\n';
    return kOk;
  });
}

int cmd_train_offline(const RunOptions& options, const std::string& dataset, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    Config config = resolve_config(options);
    if (!dataset.empty()) config.set("offline.dataset", dataset);
    const std::string path = config.get("offline.dataset");
    if (path.empty()) throw ConfigError("train-offline needs a dataset (--dataset or offline.dataset)");
    const TrainConfig tc = config.train_config();
    const PlanarEnv env(tc.env);
    ReplayBuffer buffer = load_offline_dataset(path, env.goal_offset(), env.goal_dim(), tc.replay_capacity);
    const RunManifest m = make_manifest(config, options.out_dir, "offline_");
    if (!options.quiet) out << "run " << m.run_id << " transitions=" << buffer.size() << '\n';
    const RunResult result = run_offline(tc, buffer, [&](const MetricsRecord& r) {
      if (!options.quiet) print_record(out, r, "gradient_steps");
    });
    write_outputs(m, config, result, "train-offline");
    out << "best_success=" << result.log.best_success() << " final_success=" << result.log.final_success()
        << " dir=" << m.directory << '\n';
    return kOk;
  });
}

int cmd_eval(const RunOptions& options, const std::string& checkpoint, std::size_t goals, const std::string& mode,
             std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    Config config;
    if (options.config) {
      config = Config::load(*options.config);
    } else {
      config.merge_text(checkpoint_config(checkpoint), checkpoint);
    }
    for (const auto& o : options.overrides) config.apply_override(o);
    if (options.seed) config.set("train.seed", std::to_string(*options.seed));
    const TrainConfig tc = config.train_config();
    const PlanarEnv env(tc.env);
    Agent agent(tc, env);
    load_checkpoint(agent, checkpoint);
    const auto policy_mode = parse_policy_mode(mode);
    const ActorPolicy policy = agent.actor.freeze();
    const PolicyFn fn = [&](const Vector& s, const Vector& g, std::mt19937_64& rng) {
      return policy.act(s, g, policy_mode, rng);
    };
    std::mt19937_64 rng(derive_seed(tc.seed, 4242));
    const std::size_t n = goals > 0 ? goals : tc.eval_goals;
    const double rate = evaluate(fn, env, n, rng);
    out << json{{"checkpoint", checkpoint}, {"episodes", n}, {"mode", mode}, {"success_rate", rate}}.dump() << '\n';
    return kOk;
  });
}

int cmd_verify(const VerifyOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    try {
      parse_group(options.group);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    const auto checks = run_property_suite(options);
    out << "group=" << options.group << " K=" << options.k << " samples=" << options.samples
        << (options.skip_projection ? " projection=SKIPPED" : "") << '\n';
    print_check_table(out, checks);
    double worst_equi = 0.0;
    bool ok = true;
    for (const auto& c : checks) {
      ok = ok && c.passed;
      if (c.tolerance <= 1e-8) worst_equi = std::max(worst_equi, c.max_deviation);
    }
    char line[96];
    std::snprintf(line, sizeof line, "max equivariance deviation %.3e\n", worst_equi);
    out << line;
    if (!ok) {
      for (const auto& c : checks)
        if (!c.passed) err << "violated: " << c.name << " (max deviation " << c.max_deviation << ")\n";
      return kFailure;
    }
    out << "all checks passed\n";
    return kOk;
  });
}

int cmd_oracle(std::size_t n, double gamma, double tol, const std::string& group, std::ostream& out,
               std::ostream& err) {
  return guarded(err, [&]() -> int {
    GroupPtr g;
    try {
      g = parse_group(group);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    TabularMDP mdp;
    try {
      mdp = build_tabular_gcgi(n, g, gamma);
    } catch (const ConstructionError& e) {
      err << "construction failed: " << e.what() << '\n';
      return kFailure;
    }
    const QTable q = value_iteration(mdp, tol);
    const double dev = q_invariance_deviation(mdp, q);
    const GreedyCheck greedy = check_greedy_equivariance(mdp, q, greedy_tie_tolerance(gamma, tol));
    const bool ok = dev < 10 * tol && greedy.equivariant;
    char line[200];
    std::snprintf(line, sizeof line,
                  "grid=%zux%zu group=%s gamma=%g tol=%g iterations=%zu residual=%.3e\n"
                  "q_invariance_deviation=%.3e\ngreedy_sets_equivariant=%s violations=%zu\n",
                  n, n, g->name().c_str(), gamma, tol, q.iterations, q.residual, dev,
                  greedy.equivariant ? "true" : "false", greedy.violations);
    out << line << (ok ? "PASS\n" : "FAIL\n");
    return ok ? kOk : kFailure;
  });
}

int cmd_export_dataset(const RunOptions& options, const ExportOptions& eo, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const Config config = resolve_config(options);
    const TrainConfig tc = config.train_config();
    const PlanarEnv env(tc.env);
    if (eo.episodes == 0) throw ConfigError("--episodes must be positive");
    std::unique_ptr<Agent> agent;
    PolicyFn policy;
    if (eo.policy == "scripted") {
      policy = scripted_policy(env, eo.noise);
    } else if (eo.policy == "random") {
      policy = random_policy(env);
    } else if (eo.policy == "checkpoint") {
      if (eo.checkpoint.empty()) throw ConfigError("--policy checkpoint needs --checkpoint");
      agent = std::make_unique<Agent>(tc, env);
      load_checkpoint(*agent, eo.checkpoint);
      const ActorPolicy frozen = agent->actor.freeze();
      policy = [frozen](const Vector& s, const Vector& g, std::mt19937_64& rng) {
        return frozen.act(s, g, ActorPolicy::Mode::sample, rng);
      };
    } else {
      throw ConfigError("unknown --policy '" + eo.policy + "' (expected scripted, random or checkpoint)");
    }
    std::mt19937_64 rng(derive_seed(tc.seed, 5150));
    const auto episodes = record_episodes(policy, env, eo.episodes, rng);
    std::vector<Transition> transitions;
    std::size_t successes = 0;
    for (const Episode& e : episodes) {
      bool hit = false;
      for (std::size_t t = 0; t < e.length(); ++t) {
        transitions.push_back({e.id, t, e.states[t], e.actions[t], e.states[t + 1], static_cast<bool>(e.success[t])});
        hit = hit || e.success[t];
      }
      successes += hit ? 1 : 0;
    }
    std::string path = eo.output;
    if (path.empty()) {
      fs::create_directories(options.out_dir);
      path = (fs::path(options.out_dir) / (config.get("env.kind") + "_" + eo.policy + "_n" +
                                           std::to_string(eo.episodes) + "_s" + config.get("train.seed") + ".jsonl"))
                 .string();
    } else if (const auto parent = fs::path(path).parent_path(); !parent.empty()) {
      fs::create_directories(parent);
    }
    write_transitions(path, transitions);
    out << "wrote " << transitions.size() << " transitions (" << episodes.size() << " episodes, " << successes
        << " successful) to " << path << '\n';
    return kOk;
  });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Equivariant contrastive RL on planar goal-reaching tasks"};
  app.require_subcommand(1);

  RunOptions run;
  std::string config_value;
  std::uint64_t seed_value = 0;
  std::string variant_value;
  auto add_run_options = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_value, "preset name or key=value file");
    cmd->add_option("--seed", seed_value, "run seed (overrides train.seed)");
    cmd->add_option("--out", run.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--set", run.overrides, "key=value override (repeatable)");
    cmd->add_option("--variant", variant_value, "shorthand for --set agent.variant=...");
    cmd->add_flag("--quiet", run.quiet, "only print the final line");
  };

  auto* train = app.add_subcommand("train", "online training");
  add_run_options(train);

  auto* offline = app.add_subcommand("train-offline", "offline training on a JSON-lines dataset");
  add_run_options(offline);
  std::string dataset;
  offline->add_option("--dataset", dataset, "dataset path (overrides offline.dataset)");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_run_options(eval);
  std::string checkpoint;
  std::size_t goals = 0;
  std::string mode = "mean";
  eval->add_option("--checkpoint", checkpoint, "checkpoint.json from a run")->required();
  eval->add_option("--goals", goals, "episodes (default train.eval_goals)");
  eval->add_option("--mode", mode, "mean or sample")->capture_default_str();

  auto* verify = app.add_subcommand("verify", "equivariance and gradient property suite");
  VerifyOptions vo;
  verify->add_option("--group", vo.group, "cN or dN")->capture_default_str();
  verify->add_option("--k", vo.k, "regular fields in critic embeddings")->capture_default_str();
  verify->add_option("--hidden", vo.hidden_blocks, "regular fields per hidden layer")->capture_default_str();
  verify->add_option("--samples", vo.samples, "random samples per check")->capture_default_str();
  verify->add_option("--seed", vo.seed, "seed")->capture_default_str();
  verify->add_flag("--skip-projection", vo.skip_projection, "negative control: disable weight projection");

  auto* oracle = app.add_subcommand("oracle", "tabular value-iteration oracle");
  std::size_t n = 5;
  double gamma = 0.9, tol = 1e-10;
  std::string group = "c4";
  oracle->add_option("--n", n, "grid size (odd)")->capture_default_str();
  oracle->add_option("--gamma", gamma, "discount")->capture_default_str();
  oracle->add_option("--tol", tol, "Bellman residual tolerance")->capture_default_str();
  oracle->add_option("--group", group, "group acting on the grid")->capture_default_str();

  auto* exporter = app.add_subcommand("export-dataset", "write rollouts as JSON lines");
  add_run_options(exporter);
  ExportOptions eo;
  exporter->add_option("--policy", eo.policy, "scripted, random or checkpoint")->capture_default_str();
  exporter->add_option("--episodes", eo.episodes, "episodes to record")->capture_default_str();
  exporter->add_option("--noise", eo.noise, "action noise std for the scripted policy")->capture_default_str();
  exporter->add_option("--checkpoint", eo.checkpoint, "checkpoint for --policy checkpoint");
  exporter->add_option("--output", eo.output, "output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kConfigError;
  }

  auto finalize = [&](CLI::App* cmd) {
    if (cmd->count("--config") > 0) run.config = config_value;
    if (cmd->count("--seed") > 0) run.seed = seed_value;
    if (cmd->count("--variant") > 0) run.variant = variant_value;
  };

  if (train->parsed()) {
    finalize(train);
    return cmd_train(run, out, err);
  }
  if (offline->parsed()) {
    finalize(offline);
    return cmd_train_offline(run, dataset, out, err);
  }
  if (eval->parsed()) {
    finalize(eval);
    return cmd_eval(run, checkpoint, goals, mode, out, err);
  }
  if (verify->parsed()) return cmd_verify(vo, out, err);
  if (oracle->parsed()) return cmd_oracle(n, gamma, tol, group, out, err);
  finalize(exporter);
  return cmd_export_dataset(run, eo, out, err);
}

}  // namespace ecrl::cli
