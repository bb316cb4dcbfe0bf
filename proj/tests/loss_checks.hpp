#pragma once

// Finite-difference checks of the contrastive, actor and offline objectives
// on small networks and 4-sample batches.

#include "ecrl/crl.hpp"
#include "oracles.hpp"

#include <random>

namespace checks {

using ecrl::ad::Mat;

struct LossFixture {
  ecrl::NetworkConfig config;
  ecrl::SpaceBlocks spaces;
  ecrl::Critic critic;
  ecrl::Actor actor;
  ecrl::ContrastiveBatch batch;
  Mat noise;

  explicit LossFixture(ecrl::Metric metric = ecrl::Metric::dot, std::uint64_t seed = 0,
                       ecrl::Variant variant = ecrl::Variant::ecrl)
      : config(make_config(metric, variant)),
        spaces{{{ecrl::RepKind::standard, 2}, {ecrl::RepKind::trivial, 1}},
               {{ecrl::RepKind::standard, 1}},
               {{ecrl::RepKind::standard, 1}}},
        critic(config, spaces, seed + 1),
        actor(config, spaces, seed + 2) {
    std::mt19937_64 rng(seed + 3);
    for (ecrl::Parameter* p : critic.parameters()) p->value += 0.3 * ecrl::standard_normal(p->value.rows(), p->value.cols(), rng);
    for (ecrl::Parameter* p : actor.parameters()) p->value += 0.3 * ecrl::standard_normal(p->value.rows(), p->value.cols(), rng);
    batch = {ecrl::standard_normal(4, 5, rng), ecrl::standard_normal(4, 2, rng) * 0.5, ecrl::standard_normal(4, 2, rng)};
    noise = ecrl::standard_normal(4, 2, rng);
  }

  static ecrl::NetworkConfig make_config(ecrl::Metric metric, ecrl::Variant variant) {
    ecrl::NetworkConfig c;
    c.variant = variant;
    c.repr_dim_plain = 6;
    c.hidden_width_plain = 12;
    c.group = ecrl::make_cyclic_group(8);
    c.metric = metric;
    c.repr_k = 3;
    c.hidden_blocks = 3;
    return c;
  }
};

/// Relative error between tape gradients and central differences over up to
/// `per_param` entries of every parameter in `params`.
inline double gradient_error(const std::vector<ecrl::Parameter*>& params, const std::function<double()>& value,
                             const std::vector<Mat>& grads, std::size_t per_param = 8) {
  std::vector<double> an, fd;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const auto n = static_cast<std::size_t>(params[p]->value.size());
    std::vector<std::size_t> coords;
    const std::size_t stride = std::max<std::size_t>(1, n / per_param);
    for (std::size_t i = 0; i < n && coords.size() < per_param; i += stride) coords.push_back(i);
    const auto d = oracle::central_differences(value, params[p]->value.data(), coords);
    fd.insert(fd.end(), d.begin(), d.end());
    for (std::size_t c : coords) an.push_back(grads[p].data()[c]);
  }
  return oracle::relative_error(an, fd);
}

inline double critic_loss_gradient_error(LossFixture& f, ecrl::ContrastiveLoss kind) {
  auto value = [&] {
    ecrl::ad::Tape tape;
    ecrl::ParamBinder bind(tape, false);
    return ecrl::critic_loss(bind, f.critic, f.batch, kind).item();
  };
  ecrl::ad::Tape tape;
  ecrl::ParamBinder bind(tape);
  tape.backward(ecrl::critic_loss(bind, f.critic, f.batch, kind));
  const auto params = f.critic.parameters();
  return gradient_error(params, value, bind.gradients(params));
}

inline double actor_loss_gradient_error(LossFixture& f, double alpha = 0.7) {
  const Mat goals = f.batch.goals;
  auto value = [&] {
    ecrl::ad::Tape tape;
    ecrl::ParamBinder ab(tape, false), cb(tape, false);
    return ecrl::actor_loss(ab, cb, f.actor, f.critic, f.batch.states, goals, alpha, f.noise).loss.item();
  };
  ecrl::ad::Tape tape;
  ecrl::ParamBinder ab(tape), cb(tape, false);
  tape.backward(ecrl::actor_loss(ab, cb, f.actor, f.critic, f.batch.states, goals, alpha, f.noise).loss);
  const auto params = f.actor.parameters();
  return gradient_error(params, value, ab.gradients(params));
}

inline double offline_loss_gradient_error(LossFixture& f, double lambda = 0.25) {
  auto value = [&] {
    ecrl::ad::Tape tape;
    ecrl::ParamBinder ab(tape, false), cb(tape, false);
    return ecrl::offline_actor_loss(ab, cb, f.actor, f.critic, f.batch.states, f.batch.actions, f.batch.goals, lambda,
                                    f.noise)
        .item();
  };
  ecrl::ad::Tape tape;
  ecrl::ParamBinder ab(tape), cb(tape, false);
  tape.backward(ecrl::offline_actor_loss(ab, cb, f.actor, f.critic, f.batch.states, f.batch.actions, f.batch.goals,
                                         lambda, f.noise));
  const auto params = f.actor.parameters();
  return gradient_error(params, value, ab.gradients(params));
}

}  // namespace checks
