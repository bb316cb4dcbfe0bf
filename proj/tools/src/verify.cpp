#include "ecrl_cli/verify.hpp"

#include "ecrl/crl.hpp"
#include "ecrl/equivariant.hpp"
#include "ecrl/seed.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

namespace ecrl::cli {

namespace {

constexpr double kEquiTol = 1e-8;
constexpr double kGradTol = 1e-4;

ad::Mat random_rows(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  return standard_normal(rows, cols, rng);
}

Element random_element(const FiniteGroup& g, std::mt19937_64& rng) {
  return std::uniform_int_distribution<Element>(0, g.order() - 1)(rng);
}

double max_abs(const ad::Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

void randomize(std::vector<Parameter*> params, std::mt19937_64& rng) {
  for (Parameter* p : params) p->value = standard_normal(p->value.rows(), p->value.cols(), rng) * 0.3;
}

// Test spaces mixing rho_1 and trivial fields.
SpaceBlocks mixed_spaces() {
  return {{{RepKind::standard, 2}, {RepKind::trivial, 1}},
          {{RepKind::standard, 1}, {RepKind::trivial, 1}},
          {{RepKind::standard, 1}, {RepKind::trivial, 1}}};
}

CheckResult finish(std::string name, double dev, double tol) {
  return {std::move(name), dev, tol, dev < tol};
}

CheckResult homomorphism_check(const GroupPtr& group) {
  const FiniteGroup& g = *group;
  double dev = 0.0;
  for (RepKind kind : {RepKind::trivial, RepKind::standard, RepKind::regular})
    for (Element a = 0; a < g.order(); ++a)
      for (Element b = 0; b < g.order(); ++b)
        dev = std::max(dev, max_abs(g.matrix(kind, g.compose(a, b)) - g.matrix(kind, a) * g.matrix(kind, b)));
  return finish("representation homomorphism", dev, 1e-12);
}

CheckResult layer_check(const std::string& name, const ReprLayout& in, const ReprLayout& out, bool project,
                        std::size_t samples, std::mt19937_64& rng) {
  EquivariantLinear layer(in, out, name);
  randomize(layer.parameters(), rng);
  layer.set_projection_enabled(project);
  double dev = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const Element g = random_element(*in.group(), rng);
    const ad::Mat x = random_rows(1, static_cast<Eigen::Index>(in.total_dim()), rng);
    const ad::Mat lhs = layer.forward(act_on_rows(in, g, x));
    const ad::Mat rhs = act_on_rows(out, g, layer.forward(x));
    dev = std::max(dev, max_abs(lhs - rhs));
  }
  return finish(name, dev, kEquiTol);
}

CheckResult critic_check(const std::string& name, NetworkConfig config, bool project, std::size_t samples,
                         std::mt19937_64& rng) {
  Critic critic(config, mixed_spaces(), rng());
  randomize(critic.parameters(), rng);
  critic.set_projection_enabled(project);
  const auto& sl = critic.state_layout();
  const auto& al = critic.action_layout();
  const auto& gl = critic.goal_layout();
  const auto n = static_cast<Eigen::Index>(samples);
  const ad::Mat s = random_rows(n, static_cast<Eigen::Index>(sl.total_dim()), rng);
  const ad::Mat a = random_rows(n, static_cast<Eigen::Index>(al.total_dim()), rng);
  const ad::Mat goal = random_rows(n, static_cast<Eigen::Index>(gl.total_dim()), rng);
  const Vector base = critic.similarity(s, a, goal);
  double dev = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Element g = random_element(*config.group, rng);
    const double moved = critic
                             .similarity(act_on_rows(sl, g, s.row(i)), act_on_rows(al, g, a.row(i)),
                                         act_on_rows(gl, g, goal.row(i)))(0);
    dev = std::max(dev, std::abs(moved - base(i)));
  }
  return finish(name, dev, kEquiTol);
}

CheckResult stack_check(const NetworkConfig& config, bool project, std::size_t samples, std::mt19937_64& rng) {
  Critic critic(config, mixed_spaces(), rng());
  randomize(critic.parameters(), rng);
  critic.set_projection_enabled(project);
  const EncoderStack& phi = critic.phi();
  const ReprLayout& in = phi.input_layout();
  const ReprLayout& out = phi.output_layout();
  double dev = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const Element g = random_element(*config.group, rng);
    const ad::Mat x = random_rows(1, static_cast<Eigen::Index>(in.total_dim()), rng);
    dev = std::max(dev, max_abs(phi.forward(act_on_rows(in, g, x)) - act_on_rows(out, g, phi.forward(x))));
  }
  return finish("encoder stack equivariance", dev, kEquiTol);
}

CheckResult actor_check(const NetworkConfig& config, bool project, std::size_t samples, std::mt19937_64& rng) {
  NetworkConfig c = config;
  c.actor = ActorKind::equivariant;
  Actor actor(c, mixed_spaces(), rng());
  randomize(actor.parameters(), rng);
  actor.set_projection_enabled(project);
  const ActorPolicy policy = actor.freeze();
  const auto& sl = actor.state_layout();
  const auto& gl = actor.goal_layout();
  const auto& al = actor.action_layout();
  double dev = 0.0;
  std::mt19937_64 unused(0);
  for (std::size_t i = 0; i < samples; ++i) {
    const Element g = random_element(*c.group, rng);
    const ad::Mat s = random_rows(1, static_cast<Eigen::Index>(sl.total_dim()), rng);
    const ad::Mat goal = random_rows(1, static_cast<Eigen::Index>(gl.total_dim()), rng);
    const Vector a = policy.act(s.row(0).transpose(), goal.row(0).transpose(), ActorPolicy::Mode::mean, unused);
    const Vector moved = policy.act(act_on_rows(sl, g, s).row(0).transpose(),
                                    act_on_rows(gl, g, goal).row(0).transpose(), ActorPolicy::Mode::mean, unused);
    dev = std::max(dev, (moved - act_on_vector(al, g, std::span<const double>(a.data(), a.size()))).cwiseAbs().maxCoeff());
  }
  return finish("actor mean equivariance", dev, kEquiTol);
}

CheckResult gradient_check(const NetworkConfig& config, std::mt19937_64& rng) {
  NetworkConfig c = config;
  c.repr_k = 2;
  c.hidden_blocks = 2;
  Critic critic(c, mixed_spaces(), rng());
  randomize(critic.parameters(), rng);
  ContrastiveBatch batch{random_rows(4, 5, rng), random_rows(4, 3, rng), random_rows(4, 3, rng)};
  auto loss_value = [&] {
    ad::Tape tape;
    ParamBinder bind(tape, false);
    return critic_bce_loss(bind, critic, batch).item();
  };
  ad::Tape tape;
  ParamBinder bind(tape);
  tape.backward(critic_bce_loss(bind, critic, batch));
  const auto params = critic.parameters();
  const auto grads = bind.gradients(params);
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    ad::Mat& w = params[p]->value;
    for (Eigen::Index i = 0; i < std::min<Eigen::Index>(w.size(), 6); ++i) {
      const double keep = w.data()[i];
      const double h = 1e-6;
      w.data()[i] = keep + h;
      const double up = loss_value();
      w.data()[i] = keep - h;
      const double down = loss_value();
      w.data()[i] = keep;
      const double fd = (up - down) / (2 * h);
      const double an = grads[p].data()[i];
      worst = std::max(worst, std::abs(fd - an) / std::max(1e-3, std::abs(fd) + std::abs(an)));
    }
  }
  return finish("gradient (binary NCE, finite differences)", worst, kGradTol);
}

}  // namespace

std::vector<CheckResult> run_property_suite(const VerifyOptions& options) {
  const GroupPtr group = parse_group(options.group);
  std::mt19937_64 rng(derive_seed(options.seed, 77));
  const bool project = !options.skip_projection;

  NetworkConfig config;
  config.group = group;
  config.repr_k = options.k;
  config.hidden_blocks = options.hidden_blocks;

  const ReprLayout mixed(group, {{RepKind::standard, 2}, {RepKind::trivial, 2}});
  const ReprLayout regular(group, {{RepKind::regular, 4}});
  const ReprLayout action(group, {{RepKind::standard, 1}, {RepKind::trivial, 1}});

  std::vector<CheckResult> out;
  out.push_back(homomorphism_check(group));
  out.push_back(layer_check("layer mixed -> regular", mixed, regular, project, options.samples, rng));
  out.push_back(layer_check("layer regular -> regular", regular, regular, project, options.samples, rng));
  out.push_back(layer_check("layer regular -> mixed", regular, action, project, options.samples, rng));
  out.push_back(stack_check(config, project, options.samples, rng));
  config.metric = Metric::dot;
  out.push_back(critic_check("critic invariance (dot)", config, project, options.samples, rng));
  config.metric = Metric::l2;
  out.push_back(critic_check("critic invariance (l2)", config, project, options.samples, rng));
  config.metric = Metric::dot;
  config.variant = Variant::pooled;
  out.push_back(critic_check("critic invariance (pooled)", config, project, options.samples, rng));
  config.variant = Variant::ecrl;
  out.push_back(actor_check(config, project, options.samples, rng));
  out.push_back(gradient_check(config, rng));
  return out;
}

void print_check_table(std::ostream& out, const std::vector<CheckResult>& checks) {
  char line[160];
  std::snprintf(line, sizeof line, "%-44s %14s %10s  %s\n", "check", "max deviation", "tolerance", "result");
  out << line;
  for (const auto& c : checks) {
    std::snprintf(line, sizeof line, "%-44s %14.3e %10.0e  %s\n", c.name.c_str(), c.max_deviation, c.tolerance,
                  c.passed ? "PASS" : "FAIL");
    out << line;
  }
}

}  // namespace ecrl::cli
