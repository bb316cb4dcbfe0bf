// Acceptance suite: one PASS/FAIL line per criterion.

#include "ecrl/dataset.hpp"
#include "ecrl/errors.hpp"
#include "ecrl/seed.hpp"
#include "ecrl/tabular.hpp"
#include "ecrl/training.hpp"
#include "ecrl_cli/commands.hpp"
#include "ecrl_cli/config.hpp"
#include "loss_checks.hpp"
#include "oracles.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace ecrl;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void note(const std::string& s) { std::cout << "    " << s << std::endl; }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------- oracles

// rho(g) applied to a row vector laid out as `layout`, built from the field
// table and first-principles matrices (cyclic groups only).
ad::Mat oracle_act(const ReprLayout& layout, Element g, const ad::Mat& x) {
  const std::size_t n = layout.group()->rotations();
  ad::Mat y = x;
  for (const auto& f : layout.fields()) {
    const auto off = static_cast<Eigen::Index>(f.offset);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      if (f.kind == RepKind::standard) {
        const oracle::Vec v = oracle::rho1(n, false, g) * x.row(r).segment(off, 2).transpose();
        y.row(r).segment(off, 2) = v.transpose();
      } else if (f.kind == RepKind::regular) {
        y.row(r).segment(off, static_cast<Eigen::Index>(f.dim)) =
            oracle::cyclic_shift(x.row(r).segment(off, static_cast<Eigen::Index>(f.dim)).transpose(), g).transpose();
      }
    }
  }
  return y;
}

Vector rotate_env(const Vector& v, Element g, std::size_t n) {
  return oracle::rotate_pairs(v, 0, static_cast<std::size_t>(v.size()) / 2, oracle::rho1(n, false, g));
}

// ---------------------------------------------------------------- 1

Outcome representation_algebra() {
  double hom = 0.0, std_dev = 0.0;
  bool perm_exact = true;
  for (const GroupPtr& gp : {make_cyclic_group(4), make_cyclic_group(8), make_cyclic_group(16), make_dihedral_group(4)}) {
    const FiniteGroup& g = *gp;
    const bool dihedral = g.kind() == GroupKind::dihedral;
    for (Element a = 0; a < g.order(); ++a) {
      std_dev = std::max(std_dev, (g.matrix(RepKind::standard, a) - oracle::rho1(g.rotations(), dihedral, a)).cwiseAbs().maxCoeff());
      const Matrix& reg = g.matrix(RepKind::regular, a);
      for (Eigen::Index i = 0; i < reg.size(); ++i) perm_exact = perm_exact && (reg.data()[i] == 0.0 || reg.data()[i] == 1.0);
      perm_exact = perm_exact && (reg.rowwise().sum().array() == 1.0).all() && (reg.colwise().sum().array() == 1.0).all();
      for (Element b = 0; b < g.order(); ++b)
        for (RepKind k : {RepKind::trivial, RepKind::standard, RepKind::regular})
          hom = std::max(hom, (g.matrix(k, g.compose(a, b)) - g.matrix(k, a) * g.matrix(k, b)).cwiseAbs().maxCoeff());
    }
  }
  std::size_t formula_ok = 0, formula_total = 0;
  for (std::size_t n = 1; n <= 16; ++n) {
    const GroupPtr gp = make_cyclic_group(n);
    Vector x(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(i)) = 1.0 + static_cast<double>(i);
    for (Element i = 0; i < n; ++i) {
      ++formula_total;
      if (Vector(gp->matrix(RepKind::regular, i) * x) == oracle::cyclic_shift(x, i)) ++formula_ok;
    }
  }
  const bool ok = hom < 1e-12 && std_dev < 1e-12 && perm_exact && formula_ok == formula_total;
  return {ok, fmt("homomorphism max dev %.2e (c4 c8 c16 d4; trivial, standard, regular); rho1 vs cos/sin %.2e; "
                  "regular matrices exact permutations: %s; shift formula %zu/%zu",
                  hom, std_dev, perm_exact ? "yes" : "no", formula_ok, formula_total)};
}

// ---------------------------------------------------------------- 2

struct EquiReport {
  double layers = 0.0;
  double stacks = 0.0;
  std::size_t layer_count = 0;
};

EquiReport layer_equivariance(Agent& agent, std::mt19937_64& rng) {
  EquiReport rep;
  const std::size_t order = agent.critic.state_layout().group()->order();
  auto check_stack = [&](const EncoderStack& stack) {
    for (const EquivariantLinear& layer : stack.layers()) {
      ++rep.layer_count;
      for (int i = 0; i < 100; ++i) {
        const Element g = rng() % order;
        const ad::Mat x = standard_normal(1, static_cast<Eigen::Index>(layer.layout_in().total_dim()), rng);
        const ad::Mat lhs = layer.forward(oracle_act(layer.layout_in(), g, x));
        const ad::Mat rhs = oracle_act(layer.layout_out(), g, layer.forward(x));
        rep.layers = std::max(rep.layers, (lhs - rhs).cwiseAbs().maxCoeff());
      }
    }
    for (int i = 0; i < 100; ++i) {
      const Element g = rng() % order;
      const ad::Mat x = standard_normal(1, static_cast<Eigen::Index>(stack.input_layout().total_dim()), rng);
      const ad::Mat lhs = stack.forward(oracle_act(stack.input_layout(), g, x));
      const ad::Mat rhs = oracle_act(stack.output_layout(), g, stack.forward(x));
      rep.stacks = std::max(rep.stacks, (lhs - rhs).cwiseAbs().maxCoeff());
    }
  };
  check_stack(agent.critic.phi());
  check_stack(agent.critic.psi());
  check_stack(agent.actor.mean_net());
  return rep;
}

Outcome layer_equivariance_training() {
  const auto t0 = Clock::now();
  cli::Config cfg = cli::Config::preset("push2d_ecrl");
  const TrainConfig tc = cfg.train_config();
  const PlanarEnv env(tc.env);
  Agent agent(tc, env);
  std::mt19937_64 rng(derive_seed(tc.seed, 901));
  const EquiReport before = layer_equivariance(agent, rng);

  ReplayBuffer buffer(tc.replay_capacity, env.goal_offset(), env.goal_dim());
  Collector collector(env, derive_seed(tc.seed, 902));
  collector.collect(buffer, random_policy(env), tc.warmup_steps);
  std::mt19937_64 train_rng(derive_seed(tc.seed, 903));
  for (int i = 0; i < 1000; ++i) train_step(agent, buffer, tc, train_rng);
  const EquiReport after = layer_equivariance(agent, rng);
  const double secs = seconds_since(t0);
  const double worst = std::max({before.layers, before.stacks, after.layers, after.stacks});
  const bool ok = worst < 1e-8 && secs < 120.0;
  return {ok, fmt("%zu layers + 3 stacks (critic phi/psi, actor), 100 (g,x) each; before training layer %.2e stack "
                  "%.2e; after 1000 updates layer %.2e stack %.2e (tol 1e-8); %.1f s (limit 120 s)",
                  before.layer_count, before.layers, before.stacks, after.layers, after.stacks, secs)};
}

// ---------------------------------------------------------------- 3

Outcome critic_invariance() {
  const PlanarEnv env(PlanarEnvSpec{.kind = EnvKind::push2d});
  std::mt19937_64 rng(31);
  std::vector<std::string> parts;
  double worst = 0.0;
  auto run_critic = [&](Variant v, Metric m) {
    cli::Config cfg = cli::Config::preset("push2d_ecrl");
    cfg.set("agent.variant", to_string(v));
    cfg.set("agent.metric", to_string(m));
    const TrainConfig tc = cfg.train_config();
    Critic critic(tc.net, env.blocks(), 32);
    for (Parameter* p : critic.parameters()) p->value += 0.1 * standard_normal(p->value.rows(), p->value.cols(), rng);
    const std::size_t n = tc.net.group->rotations();
    double dev = 0.0;
    for (int i = 0; i < 100; ++i) {
      const Element g = rng() % n;
      const Vector s = standard_normal(4, 1, rng).col(0) * 0.5, a = standard_normal(2, 1, rng).col(0),
                   goal = standard_normal(2, 1, rng).col(0) * 0.5;
      dev = std::max(dev, std::abs(critic.similarity(rotate_env(s, g, n), rotate_env(a, g, n), rotate_env(goal, g, n)) -
                                   critic.similarity(s, a, goal)));
    }
    parts.push_back(fmt("%s/%s %.2e", to_string(v).c_str(), to_string(m).c_str(), dev));
    worst = std::max(worst, dev);
  };
  run_critic(Variant::ecrl, Metric::dot);
  run_critic(Variant::ecrl, Metric::l2);
  run_critic(Variant::pooled, Metric::dot);
  run_critic(Variant::pooled, Metric::l2);

  const TrainConfig tc = cli::Config::preset("push2d_ecrl").train_config();
  Actor actor(tc.net, env.blocks(), 33);
  for (Parameter* p : actor.parameters()) p->value += 0.1 * standard_normal(p->value.rows(), p->value.cols(), rng);
  const ActorPolicy policy = actor.freeze();
  const std::size_t n = tc.net.group->rotations();
  double actor_dev = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Element g = rng() % n;
    const Vector s = standard_normal(4, 1, rng).col(0) * 0.5, goal = standard_normal(2, 1, rng).col(0) * 0.5;
    const Vector a = policy.act(s, goal, ActorPolicy::Mode::mean, rng);
    const Vector moved = policy.act(rotate_env(s, g, n), rotate_env(goal, g, n), ActorPolicy::Mode::mean, rng);
    actor_dev = std::max(actor_dev, (moved - rotate_env(a, g, n)).cwiseAbs().maxCoeff());
  }
  std::string joined;
  for (const auto& p : parts) joined += (joined.empty() ? "" : ", ") + p;
  const bool ok = worst < 1e-8 && actor_dev < 1e-8;
  return {ok, fmt("|f(gs,ga,gg) - f(s,a,g)| over 100 samples: %s; actor mean equivariance %.2e (tol 1e-8)",
                  joined.c_str(), actor_dev)};
}

// ---------------------------------------------------------------- 4

struct OracleReport {
  double q_dev = 0.0;
  double closed_form = 0.0;
  std::size_t greedy_bad = 0;
  std::size_t greedy_checked = 0;
  std::size_t iterations = 0;
  double residual = 0.0;
};

OracleReport tabular_oracle(std::size_t n, const char* group, double gamma, double tol) {
  const GroupPtr gp = parse_group(group);
  const TabularMDP mdp = build_tabular_gcgi(n, gp, gamma);
  const QTable q = value_iteration(mdp, tol);
  OracleReport rep;
  rep.iterations = q.iterations;
  rep.residual = q.residual;
  const bool dihedral = gp->kind() == GroupKind::dihedral;
  const double tie = 2.0 * gamma * tol / (1.0 - gamma) + 1e-12;
  auto argmax_set = [&](std::size_t s, std::size_t goal) {
    double best = -1e300;
    for (std::size_t a = 0; a < 5; ++a) best = std::max(best, q(s, a, goal));
    std::set<std::size_t> out;
    for (std::size_t a = 0; a < 5; ++a)
      if (q(s, a, goal) >= best - tie) out.insert(a);
    return out;
  };
  for (std::size_t s = 0; s < mdp.num_states; ++s)
    for (std::size_t a = 0; a < 5; ++a)
      for (std::size_t goal = 0; goal < mdp.num_goals; ++goal)
        rep.closed_form = std::max(rep.closed_form, std::abs(q(s, a, goal) - oracle::grid_q(n, gamma, s, a, goal)));
  for (Element g = 0; g < gp->order(); ++g) {
    const oracle::Mat m = oracle::rho1(gp->rotations(), dihedral, g);
    for (std::size_t s = 0; s < mdp.num_states; ++s) {
      const std::size_t gs = oracle::grid_transform(n, s, m);
      for (std::size_t goal = 0; goal < mdp.num_goals; ++goal) {
        const std::size_t gg = oracle::grid_transform(n, goal, m);
        for (std::size_t a = 0; a < 5; ++a)
          rep.q_dev = std::max(rep.q_dev, std::abs(q(gs, oracle::action_transform(a, m), gg) - q(s, a, goal)));
        std::set<std::size_t> image;
        for (std::size_t a : argmax_set(s, goal)) image.insert(oracle::action_transform(a, m));
        ++rep.greedy_checked;
        if (image != argmax_set(gs, gg)) ++rep.greedy_bad;
      }
    }
  }
  return rep;
}

Outcome proposition_oracle() {
  const auto t0 = Clock::now();
  std::vector<std::string> parts;
  bool ok = true;
  for (std::size_t n : {5, 7}) {
    for (const char* group : {"c4", "d4"}) {
      const OracleReport r = tabular_oracle(n, group, 0.9, 1e-10);
      ok = ok && r.residual < 1e-10 && r.q_dev < 1e-9 && r.greedy_bad == 0;
      parts.push_back(fmt("%zux%zu %s: residual %.1e, Q-invariance %.2e, greedy sets %zu/%zu equivariant, "
                          "closed-form gap %.1e",
                          n, n, group, r.residual, r.q_dev, r.greedy_checked - r.greedy_bad, r.greedy_checked,
                          r.closed_form));
    }
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 30.0;
  std::string joined;
  for (const auto& p : parts) joined += (joined.empty() ? "" : "; ") + p;
  return {ok, joined + fmt("; gamma 0.9 (tol 1e-9); %.2f s (limit 30 s)", secs)};
}

// ---------------------------------------------------------------- 5

Outcome gradient_correctness() {
  double worst = 0.0;
  std::vector<std::string> parts;
  for (Metric m : {Metric::dot, Metric::l2}) {
    checks::LossFixture f(m, 17);
    const double bce = checks::critic_loss_gradient_error(f, ContrastiveLoss::bce);
    const double nce = checks::critic_loss_gradient_error(f, ContrastiveLoss::infonce);
    const double act = checks::actor_loss_gradient_error(f);
    const double off = checks::offline_loss_gradient_error(f);
    worst = std::max({worst, bce, nce, act, off});
    parts.push_back(fmt("%s: bce %.1e infonce %.1e actor %.1e offline %.1e", to_string(m).c_str(), bce, nce, act, off));
  }
  double bce_gap = 0.0, nce_gap = 0.0;
  for (Eigen::Index b : {4, 256}) {
    ad::Tape t;
    const ad::Var z = t.constant(ad::Mat::Zero(b, b));
    bce_gap = std::max(bce_gap, std::abs(bce_from_logits(z).item() - 2.0 * std::log(2.0)));
    nce_gap = std::max(nce_gap, std::abs(infonce_from_logits(z).item() - std::log(static_cast<double>(b))));
  }
  const bool ok = worst < 1e-4 && bce_gap <= 1e-9 && nce_gap <= 1e-9;
  return {ok, fmt("relative FD error on B=4 batches, %s; %s (tol 1e-4); zero logits: |BCE - 2 log 2| %.1e, "
                  "|InfoNCE - log B| %.1e (tol 1e-9)",
                  parts[0].c_str(), parts[1].c_str(), bce_gap, nce_gap)};
}

// ---------------------------------------------------------------- 6

struct LearnRun {
  double best = 0.0;
  double final_success = 0.0;
  double tail_mean = 0.0;
  double secs = 0.0;
  std::size_t env_steps = 0;
};

LearnRun online_run(const cli::Config& cfg, std::size_t tail_evals) {
  const auto t0 = Clock::now();
  const RunResult r = run_online(cfg.train_config());
  LearnRun out;
  out.secs = seconds_since(t0);
  out.best = r.log.best_success();
  out.final_success = r.log.final_success();
  out.env_steps = r.env_steps;
  const auto& recs = r.log.records();
  const std::size_t k = std::min(tail_evals, recs.size());
  for (std::size_t i = recs.size() - k; i < recs.size(); ++i) out.tail_mean += recs[i].success_rate / static_cast<double>(k);
  return out;
}

Outcome online_reach() {
  std::vector<double> best;
  double slowest = 0.0;
  for (std::uint64_t seed : {0, 1, 2}) {
    cli::Config cfg = cli::Config::preset("reach2d_ecrl");
    cfg.set("train.seed", std::to_string(seed));
    cfg.set("train.stop_success", "0.9");
    const LearnRun r = online_run(cfg, 1);
    note(fmt("reach2d ecrl seed %llu: best success %.2f by %zu env steps, %.1f s", static_cast<unsigned long long>(seed),
             r.best, r.env_steps, r.secs));
    best.push_back(r.best);
    slowest = std::max(slowest, r.secs);
  }
  const double med = median(best);
  const bool ok = med >= 0.9 && slowest < 600.0;
  return {ok, fmt("ECRL (c8, K=16, 32 hidden fields) reach2d within 50k env steps: median best success %.2f over 3 "
                  "seeds (need >= 0.90); slowest seed %.0f s (limit 600 s)",
                  med, slowest)};
}

// ---------------------------------------------------------------- 7

constexpr std::size_t kPushTailEvals = 5;

Outcome online_push() {
  std::map<Variant, std::vector<double>> scores;
  std::vector<double> per_seed_secs(3, 0.0);
  double slowest_run = 0.0;
  for (std::uint64_t seed : {0, 1, 2}) {
    for (Variant v : {Variant::ecrl, Variant::crl, Variant::pooled}) {
      cli::Config cfg = cli::Config::preset("push2d_" + to_string(v));
      cfg.set("train.seed", std::to_string(seed));
      const LearnRun r = online_run(cfg, kPushTailEvals);
      note(fmt("push2d %s seed %llu: success over last %zu evals %.3f (final %.2f, best %.2f), %.0f s",
               to_string(v).c_str(), static_cast<unsigned long long>(seed), kPushTailEvals, r.tail_mean,
               r.final_success, r.best, r.secs));
      scores[v].push_back(r.tail_mean);
      per_seed_secs[seed] += r.secs;
      slowest_run = std::max(slowest_run, r.secs);
    }
  }
  const double e = median(scores[Variant::ecrl]), c = median(scores[Variant::crl]), p = median(scores[Variant::pooled]);
  auto beats = [&](double other) { return e - other >= 0.05 || (e > 0.9 && other > 0.9); };
  const double slowest_seed = *std::max_element(per_seed_secs.begin(), per_seed_secs.end());
  const bool ok = beats(c) && beats(p) && slowest_run < 1800.0;
  return {ok, fmt("push2d at 100k env steps, median over 3 paired seeds of mean success in the last %zu evaluations: "
                  "ECRL %.3f, CRL %.3f, pooled %.3f; margins %+.1f and %+.1f pp (need >= 5 pp); slowest run %.0f s "
                  "(limit 1800 s), slowest seed over all variants %.0f s",
                  kPushTailEvals, e, c, p, 100 * (e - c), 100 * (e - p), slowest_run, slowest_seed)};
}

// ---------------------------------------------------------------- 8

Outcome offline_reach() {
  const auto t0 = Clock::now();
  const fs::path dir = fs::temp_directory_path() / "ecrl_acceptance_offline";
  fs::create_directories(dir);
  std::map<std::pair<std::size_t, Variant>, double> mean_best;
  for (std::size_t demos : {5, 10}) {
    for (std::uint64_t seed : {0, 1, 2, 3}) {
      const cli::Config base = cli::Config::preset("reach2d_offline_ecrl");
      const TrainConfig btc = base.train_config();
      const PlanarEnv env(btc.env);
      std::mt19937_64 rng(derive_seed(seed, 5150 + demos));
      std::vector<Transition> trace;
      for (const Episode& ep : record_episodes(scripted_policy(env, 0.3), env, demos, rng))
        for (std::size_t t = 0; t < ep.length(); ++t)
          trace.push_back({ep.id, t, ep.states[t], ep.actions[t], ep.states[t + 1], static_cast<bool>(ep.success[t])});
      const std::string path = (dir / fmt("demos_%zu_s%llu.jsonl", demos, static_cast<unsigned long long>(seed))).string();
      write_transitions(path, trace);
      for (Variant v : {Variant::ecrl, Variant::crl}) {
        cli::Config cfg = cli::Config::preset("reach2d_offline_" + to_string(v));
        cfg.set("train.seed", std::to_string(seed));
        const TrainConfig tc = cfg.train_config();
        const ReplayBuffer data = load_offline_dataset(path, env.goal_offset(), env.goal_dim());
        const RunResult r = run_offline(tc, data);
        note(fmt("offline reach2d %zu demos %s seed %llu: best-checkpoint success %.2f", demos, to_string(v).c_str(),
                 static_cast<unsigned long long>(seed), r.log.best_success()));
        mean_best[{demos, v}] += r.log.best_success() / 4.0;
      }
    }
  }
  fs::remove_all(dir);
  const double secs = seconds_since(t0);
  const double e5 = mean_best[{5, Variant::ecrl}], c5 = mean_best[{5, Variant::crl}];
  const double e10 = mean_best[{10, Variant::ecrl}], c10 = mean_best[{10, Variant::crl}];
  const bool ok = e5 >= c5 && e10 >= c10 && secs < 600.0;
  return {ok, fmt("best-checkpoint success averaged over 4 seeds: 5 demos ECRL %.3f vs CRL %.3f; 10 demos ECRL %.3f vs "
                  "CRL %.3f; %.0f s total (limit 600 s)",
                  e5, c5, e10, c10, secs)};
}

// ---------------------------------------------------------------- 9

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "ecrl_acceptance_determinism";
  fs::remove_all(root);
  const std::vector<std::string> small = {"train.total_env_steps=4000", "train.warmup_steps=1000",
                                          "train.eval_interval=1000",   "train.eval_goals=20",
                                          "train.batch_size=64",        "offline.gradient_steps=200",
                                          "offline.eval_interval=50",   "offline.eval_goals=20"};
  struct Case {
    std::string name;
    std::string preset;
    std::uint64_t seed;
    bool offline;
  };
  const std::vector<Case> cases = {{"reach2d ecrl", "reach2d_ecrl", 0, false},
                                   {"push2d crl", "push2d_crl", 1, false},
                                   {"push2d pooled", "push2d_pooled", 2, false},
                                   {"reach2d offline ecrl", "reach2d_offline_ecrl", 3, true}};
  std::ostringstream sink;
  const std::string dataset = (root / "demo.jsonl").string();
  {
    cli::RunOptions opts;
    opts.config = "reach2d_ecrl";
    cli::ExportOptions eo;
    eo.episodes = 5;
    eo.output = dataset;
    cli::cmd_export_dataset(opts, eo, sink, sink);
  }
  std::size_t identical = 0;
  std::vector<std::string> failures;
  for (const Case& c : cases) {
    std::string csv[2];
    for (int rep = 0; rep < 2; ++rep) {
      cli::RunOptions opts;
      opts.config = c.preset;
      opts.seed = c.seed;
      opts.overrides = small;
      opts.quiet = true;
      const fs::path out = root / c.preset / ("rep" + std::to_string(rep));
      opts.out_dir = out.string();
      const int code = c.offline ? cli::cmd_train_offline(opts, dataset, sink, sink) : cli::cmd_train(opts, sink, sink);
      if (code != 0) continue;
      for (const auto& entry : fs::recursive_directory_iterator(out))
        if (entry.path().filename() == "metrics.csv") csv[rep] = read_file(entry.path());
    }
    if (!csv[0].empty() && csv[0] == csv[1]) {
      ++identical;
    } else {
      failures.push_back(c.name);
    }
  }
  fs::remove_all(root);
  std::string failed;
  for (const auto& f : failures) failed += " " + f;
  return {identical == cases.size(),
          fmt("metrics.csv byte-identical across two runs for %zu/%zu (config, seed) pairs (reach2d ecrl, push2d crl, "
              "push2d pooled, offline reach2d ecrl)%s%s",
              identical, cases.size(), failed.empty() ? "" : "; differing:", failed.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  std::vector<int> selected;
  app.add_option("--criteria", selected, "criteria to run (default: all)")->delimiter(',')->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8, 9};

  const std::map<int, std::pair<const char*, std::function<Outcome()>>> criteria = {
      {1, {"representation algebra", representation_algebra}},
      {2, {"layer equivariance before and after training", layer_equivariance_training}},
      {3, {"critic invariance and actor equivariance", critic_invariance}},
      {4, {"tabular symmetry oracle", proposition_oracle}},
      {5, {"gradient correctness and loss sanity", gradient_correctness}},
      {6, {"online reach2d learning", online_reach}},
      {7, {"push2d ECRL vs CRL vs pooled", online_push}},
      {8, {"offline reach2d ECRL vs CRL", offline_reach}},
      {9, {"determinism", determinism}},
  };
  int failed = 0;
  for (int id : selected) {
    const auto& [name, fn] = criteria.at(id);
    const auto t0 = Clock::now();
    Outcome out;
    try {
      out = fn();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    std::printf("%s [%d] %s: %s (%.1f s)\n", out.passed ? "PASS" : "FAIL", id, name, out.detail.c_str(), secs);
    std::fflush(stdout);
    failed += out.passed ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
