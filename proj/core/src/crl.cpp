#include "ecrl/crl.hpp"

#include "ecrl/errors.hpp"
#include "ecrl/seed.hpp"

#include <cmath>
#include <numbers>

namespace ecrl {

namespace {

constexpr double kUnsquashLimit = 1.0 - 1e-6;

// sinh(x) - x without cancellation near zero.
double sinh_minus_x(double x) {
  if (std::abs(x) < 0.5) {
    const double x2 = x * x;
    // x^3/3! + x^5/5! + ... + x^13/13!
    double term = x * x2 / 6.0;
    double total = term;
    for (int k = 5; k <= 13; k += 2) {
      term *= x2 / static_cast<double>((k - 1) * k);
      total += term;
    }
    return total;
  }
  return std::sinh(x) - x;
}

// tanh(r) / r
double radial_gain(double r) { return r < 1e-12 ? 1.0 : std::tanh(r) / r; }

// h'(r) / r for h(r) = tanh(r) / r
double radial_gain_slope(double r) {
  if (r < 1e-6) return -2.0 / 3.0 + 8.0 * r * r / 15.0;
  if (r < 0.25) {
    const double c = std::cosh(r);
    return -sinh_minus_x(2.0 * r) / (2.0 * r * r * r * c * c);
  }
  const double t = std::tanh(r);
  return (r * (1.0 - t * t) - t) / (r * r * r);
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// log(1 - tanh(x)^2)
double log_sech2(double x) {
  const double ax = std::abs(x);
  return 2.0 * (std::numbers::ln2 - ax - softplus(-2.0 * ax));
}

// log|det J| of the radial squash at radius r
double radial_log_det(double r) { return log_sech2(r) + std::log(radial_gain(r)); }

// L'(r) / r for L = radial_log_det
double radial_log_det_slope(double r) {
  if (r < 1e-6) return -8.0 / 3.0;
  const double x = 2.0 * r;
  const double q = r < 0.25 ? sinh_minus_x(x) / std::sinh(x) : 1.0 - x / std::sinh(x);
  return -2.0 * radial_gain(r) - q / (r * r);
}

const ReprLayout& pick(const ReprLayout& equi, const ReprLayout& plain, bool equivariant) {
  return equivariant ? equi : plain;
}

ReprLayout plain_layout(std::size_t dim) {
  return ReprLayout(make_cyclic_group(1), {{RepKind::trivial, dim}});
}

std::vector<ReprLayout> mlp_layouts(const ReprLayout& in, const ReprLayout& hidden, const ReprLayout& out,
                                    std::size_t hidden_layers) {
  std::vector<ReprLayout> layouts{in};
  for (std::size_t i = 0; i < hidden_layers; ++i) layouts.push_back(hidden);
  layouts.push_back(out);
  return layouts;
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::ecrl: return "ecrl";
    case Variant::crl: return "crl";
    case Variant::pooled: return "pooled";
  }
  return "?";
}

std::string to_string(Metric m) { return m == Metric::dot ? "dot" : "l2"; }

std::string to_string(ContrastiveLoss l) { return l == ContrastiveLoss::bce ? "bce" : "infonce"; }

std::string to_string(ActorKind a) {
  switch (a) {
    case ActorKind::automatic: return "auto";
    case ActorKind::equivariant: return "equivariant";
    case ActorKind::plain: return "plain";
  }
  return "?";
}

Variant parse_variant(std::string_view s) {
  if (s == "ecrl") return Variant::ecrl;
  if (s == "crl") return Variant::crl;
  if (s == "pooled") return Variant::pooled;
  throw ConfigError("unknown variant '" + std::string(s) + "' (expected ecrl, crl or pooled)");
}

Metric parse_metric(std::string_view s) {
  if (s == "dot") return Metric::dot;
  if (s == "l2") return Metric::l2;
  throw ConfigError("unknown metric '" + std::string(s) + "' (expected dot or l2)");
}

ContrastiveLoss parse_loss(std::string_view s) {
  if (s == "bce") return ContrastiveLoss::bce;
  if (s == "infonce") return ContrastiveLoss::infonce;
  throw ConfigError("unknown loss '" + std::string(s) + "' (expected bce or infonce)");
}

ActorKind parse_actor_kind(std::string_view s) {
  if (s == "auto") return ActorKind::automatic;
  if (s == "equivariant") return ActorKind::equivariant;
  if (s == "plain") return ActorKind::plain;
  throw ConfigError("unknown actor kind '" + std::string(s) + "' (expected auto, equivariant or plain)");
}

ActorPolicy::Mode parse_policy_mode(std::string_view s) {
  if (s == "sample") return ActorPolicy::Mode::sample;
  if (s == "mean") return ActorPolicy::Mode::mean;
  throw ConfigError("unknown policy mode '" + std::string(s) + "' (expected sample or mean)");
}

bool NetworkConfig::equivariant_actor() const {
  switch (actor) {
    case ActorKind::equivariant: return true;
    case ActorKind::plain: return false;
    case ActorKind::automatic: return variant == Variant::ecrl;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Critic

Critic::Critic(const NetworkConfig& config, const SpaceBlocks& spaces, std::uint64_t seed)
    : variant_(config.variant),
      metric_(config.metric),
      state_layout_(config.group, spaces.state),
      action_layout_(config.group, spaces.action),
      goal_layout_(config.group, spaces.goal),
      l2_scale_{"critic.l2_scale", ad::Mat::Constant(1, 1, std::log(std::numbers::e - 1.0))},
      l2_shift_{"critic.l2_shift", ad::Mat::Zero(1, 1)} {
  const bool equi = variant_ != Variant::crl;
  const GroupPtr& g = config.group;
  const ReprLayout sa = state_layout_.concat(action_layout_);
  const ReprLayout hidden_equi(g, {{RepKind::regular, config.hidden_blocks}});
  const ReprLayout hidden_plain = plain_layout(config.hidden_width_plain);
  const ReprLayout out_equi(g, {{RepKind::regular, config.repr_k}});
  const ReprLayout out_plain = plain_layout(config.repr_dim_plain);

  const ReprLayout& hidden = pick(hidden_equi, hidden_plain, equi);
  const ReprLayout& out = pick(out_equi, out_plain, equi);
  const ReprLayout phi_in = equi ? sa : plain_layout(sa.total_dim());
  const ReprLayout psi_in = equi ? goal_layout_ : plain_layout(goal_layout_.total_dim());
  const bool pool = variant_ == Variant::pooled;

  phi_ = init_stack(mlp_layouts(phi_in, hidden, out, config.hidden_layers), derive_seed(seed, 1), {}, pool, "critic.phi");
  psi_ = init_stack(mlp_layouts(psi_in, hidden, out, config.hidden_layers), derive_seed(seed, 2), {}, pool, "critic.psi");
}

ad::Var Critic::embed_state_action(ParamBinder& bind, ad::Var states, ad::Var actions) const {
  return phi_.forward(bind, ad::concat({states, actions}));
}

ad::Var Critic::embed_goal(ParamBinder& bind, ad::Var goals) const { return psi_.forward(bind, goals); }

ad::Var Critic::logits(ParamBinder& bind, ad::Var phi, ad::Var psi) const {
  if (metric_ == Metric::dot) return ad::matmul_nt(phi, psi);
  ad::Var dist = ad::sqrt(ad::pairwise_sq_dist(phi, psi));
  ad::Var a = ad::softplus(bind(l2_scale_));
  return ad::add(ad::neg(ad::mul(dist, a)), bind(l2_shift_));
}

ad::Var Critic::paired(ParamBinder& bind, ad::Var phi, ad::Var psi) const {
  if (metric_ == Metric::dot) return ad::row_sum(ad::mul(phi, psi));
  ad::Var dist = ad::sqrt(ad::row_sum(ad::square(ad::sub(phi, psi))));
  ad::Var a = ad::softplus(bind(l2_scale_));
  return ad::add(ad::neg(ad::mul(dist, a)), bind(l2_shift_));
}

Vector Critic::similarity(const ad::Mat& states, const ad::Mat& actions, const ad::Mat& goals) const {
  ad::Mat sa(states.rows(), states.cols() + actions.cols());
  sa << states, actions;
  const ad::Mat phi = phi_.forward(sa);
  const ad::Mat psi = psi_.forward(goals);
  if (metric_ == Metric::dot) return phi.cwiseProduct(psi).rowwise().sum();
  const double a = softplus(l2_scale_.value(0, 0));
  const double b = l2_shift_.value(0, 0);
  Vector out(phi.rows());
  for (Eigen::Index i = 0; i < phi.rows(); ++i) out(i) = -a * (phi.row(i) - psi.row(i)).norm() + b;
  return out;
}

double Critic::similarity(const Vector& s, const Vector& a, const Vector& g) const {
  return similarity(ad::Mat(s.transpose()), ad::Mat(a.transpose()), ad::Mat(g.transpose()))(0);
}

std::vector<Parameter*> Critic::parameters() {
  auto params = phi_.parameters();
  for (Parameter* p : psi_.parameters()) params.push_back(p);
  if (metric_ == Metric::l2) {
    params.push_back(&l2_scale_);
    params.push_back(&l2_shift_);
  }
  return params;
}

void Critic::set_projection_enabled(bool enabled) {
  phi_.set_projection_enabled(enabled);
  psi_.set_projection_enabled(enabled);
}

// ---------------------------------------------------------------------------
// Squashing

std::size_t SquashFields::dim() const {
  std::size_t d = 0;
  for (std::size_t s : sizes) d += s;
  return d;
}

SquashFields SquashFields::from_blocks(const std::vector<ReprBlock>& blocks) {
  SquashFields fields;
  for (const auto& block : blocks) {
    std::size_t size = 0;
    switch (block.kind) {
      case RepKind::trivial: size = 1; break;
      case RepKind::standard: size = 2; break;
      default: throw LayoutError("action layouts may only contain trivial and standard fields");
    }
    for (std::size_t m = 0; m < block.multiplicity; ++m) fields.sizes.push_back(size);
  }
  return fields;
}

ad::Mat squash(const ad::Mat& u, const SquashFields& fields) {
  if (static_cast<std::size_t>(u.cols()) != fields.dim()) throw ShapeError("squash: width does not match fields");
  ad::Mat out(u.rows(), u.cols());
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    Eigen::Index off = 0;
    for (std::size_t size : fields.sizes) {
      if (size == 1) {
        out(i, off) = std::tanh(u(i, off));
      } else {
        const double gain = radial_gain(std::hypot(u(i, off), u(i, off + 1)));
        out(i, off) = gain * u(i, off);
        out(i, off + 1) = gain * u(i, off + 1);
      }
      off += static_cast<Eigen::Index>(size);
    }
  }
  return out;
}

ad::Var squash(ad::Var u, const SquashFields& fields) {
  ad::Mat out = squash(u.value(), fields);
  return u.tape().record(std::move(out), {u}, [u, fields](ad::Tape& t, const ad::Mat& up) {
    const ad::Mat& uv = u.value();
    ad::Mat g(uv.rows(), uv.cols());
    for (Eigen::Index i = 0; i < uv.rows(); ++i) {
      Eigen::Index off = 0;
      for (std::size_t size : fields.sizes) {
        if (size == 1) {
          const double th = std::tanh(uv(i, off));
          g(i, off) = up(i, off) * (1.0 - th * th);
        } else {
          const double x = uv(i, off), y = uv(i, off + 1);
          const double r = std::hypot(x, y);
          const double h = radial_gain(r);
          const double slope = radial_gain_slope(r);
          const double dot = x * up(i, off) + y * up(i, off + 1);
          g(i, off) = h * up(i, off) + slope * dot * x;
          g(i, off + 1) = h * up(i, off + 1) + slope * dot * y;
        }
        off += static_cast<Eigen::Index>(size);
      }
    }
    t.accumulate(u, g);
  });
}

ad::Var squash_log_det(ad::Var u, const SquashFields& fields) {
  const ad::Mat& uv = u.value();
  if (static_cast<std::size_t>(uv.cols()) != fields.dim()) throw ShapeError("squash_log_det: width does not match fields");
  ad::Mat out = ad::Mat::Zero(uv.rows(), 1);
  for (Eigen::Index i = 0; i < uv.rows(); ++i) {
    Eigen::Index off = 0;
    for (std::size_t size : fields.sizes) {
      out(i, 0) += size == 1 ? log_sech2(uv(i, off)) : radial_log_det(std::hypot(uv(i, off), uv(i, off + 1)));
      off += static_cast<Eigen::Index>(size);
    }
  }
  return u.tape().record(std::move(out), {u}, [u, fields](ad::Tape& t, const ad::Mat& up) {
    const ad::Mat& uv = u.value();
    ad::Mat g(uv.rows(), uv.cols());
    for (Eigen::Index i = 0; i < uv.rows(); ++i) {
      Eigen::Index off = 0;
      for (std::size_t size : fields.sizes) {
        if (size == 1) {
          g(i, off) = -2.0 * std::tanh(uv(i, off)) * up(i, 0);
        } else {
          const double slope = radial_log_det_slope(std::hypot(uv(i, off), uv(i, off + 1)));
          g(i, off) = slope * uv(i, off) * up(i, 0);
          g(i, off + 1) = slope * uv(i, off + 1) * up(i, 0);
        }
        off += static_cast<Eigen::Index>(size);
      }
    }
    t.accumulate(u, g);
  });
}

ad::Mat unsquash(const ad::Mat& a, const SquashFields& fields) {
  if (static_cast<std::size_t>(a.cols()) != fields.dim()) throw ShapeError("unsquash: width does not match fields");
  ad::Mat u(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    Eigen::Index off = 0;
    for (std::size_t size : fields.sizes) {
      if (size == 1) {
        u(i, off) = std::atanh(std::clamp(a(i, off), -kUnsquashLimit, kUnsquashLimit));
      } else {
        const double r = std::hypot(a(i, off), a(i, off + 1));
        const double gain = r < 1e-300 ? 1.0 : std::atanh(std::min(r, kUnsquashLimit)) / r;
        u(i, off) = gain * a(i, off);
        u(i, off + 1) = gain * a(i, off + 1);
      }
      off += static_cast<Eigen::Index>(size);
    }
  }
  return u;
}

// ---------------------------------------------------------------------------
// Actor

Actor::Actor(const NetworkConfig& config, const SpaceBlocks& spaces, std::uint64_t seed)
    : equivariant_(config.equivariant_actor()),
      state_layout_(config.group, spaces.state),
      action_layout_(config.group, spaces.action),
      goal_layout_(config.group, spaces.goal),
      fields_(SquashFields::from_blocks(spaces.action)),
      min_log_std_(config.min_log_std),
      max_log_std_(config.max_log_std) {
  const GroupPtr& g = config.group;
  const ReprLayout in = state_layout_.concat(goal_layout_);
  std::vector<ReprLayout> layouts;
  if (equivariant_) {
    layouts = mlp_layouts(in, ReprLayout(g, {{RepKind::regular, config.hidden_blocks}}), action_layout_,
                          config.hidden_layers);
  } else {
    layouts = mlp_layouts(plain_layout(in.total_dim()), plain_layout(config.hidden_width_plain),
                          plain_layout(action_layout_.total_dim()), config.hidden_layers);
  }
  mean_ = init_stack(layouts, derive_seed(seed, 3), {}, false, "actor.mean");

  const auto n_fields = static_cast<Eigen::Index>(fields_.sizes.size());
  const auto dim = static_cast<Eigen::Index>(fields_.dim());
  expand_ = ad::Mat::Zero(n_fields, dim);
  Eigen::Index off = 0;
  for (Eigen::Index f = 0; f < n_fields; ++f) {
    for (std::size_t k = 0; k < fields_.sizes[static_cast<std::size_t>(f)]; ++k) expand_(f, off++) = 1.0;
  }
  log_std_ = {"actor.log_std", ad::Mat::Constant(1, n_fields, config.init_log_std)};
  bounds_ = ad::Mat::Ones(1, dim);
}

ad::Var Actor::mean_forward(ParamBinder& bind, ad::Var states, ad::Var goals) const {
  return mean_.forward(bind, ad::concat({states, goals}));
}

ad::Var Actor::log_std(ParamBinder& bind) const {
  ad::Var clamped = ad::clamp(bind(log_std_), min_log_std_, max_log_std_);
  return ad::matmul(clamped, bind.tape().constant(expand_));
}

Actor::Sample Actor::sample(ParamBinder& bind, ad::Var states, ad::Var goals, const ad::Mat& noise) const {
  ad::Tape& tape = bind.tape();
  ad::Var mean = mean_forward(bind, states, goals);
  if (noise.rows() != mean.rows() || noise.cols() != mean.cols()) throw ShapeError("actor noise has the wrong shape");
  ad::Var ls = log_std(bind);
  ad::Var u = ad::add(mean, ad::mul(tape.constant(noise), ad::exp(ls)));
  ad::Var action = ad::mul(squash(u, fields_), tape.constant(bounds_));
  ad::Var log_prob = ad::sub(ad::gaussian_log_prob(u, mean, ls), squash_log_det(u, fields_));
  log_prob = ad::shift(log_prob, -bounds_.array().log().sum());
  return {action, log_prob};
}

ad::Var Actor::log_prob(ParamBinder& bind, ad::Var states, ad::Var goals, const ad::Mat& actions) const {
  ad::Tape& tape = bind.tape();
  ad::Var mean = mean_forward(bind, states, goals);
  if (actions.rows() != mean.rows() || actions.cols() != mean.cols()) throw ShapeError("actions have the wrong shape");
  const ad::Mat unit = actions.array() / bounds_.replicate(actions.rows(), 1).array();
  ad::Var u = tape.constant(unsquash(unit, fields_));
  ad::Var lp = ad::sub(ad::gaussian_log_prob(u, mean, log_std(bind)), squash_log_det(u, fields_));
  return ad::shift(lp, -bounds_.array().log().sum());
}

ActorPolicy Actor::freeze() const {
  const ad::Mat ls = log_std_.value.cwiseMax(min_log_std_).cwiseMin(max_log_std_) * expand_;
  return ActorPolicy(mean_.freeze(), ls, fields_, bounds_, state_layout_.total_dim());
}

std::vector<Parameter*> Actor::parameters() {
  auto params = mean_.parameters();
  params.push_back(&log_std_);
  return params;
}

ActorPolicy::ActorPolicy(FrozenStack mean, ad::Mat log_std, SquashFields fields, ad::Mat bounds,
                         std::size_t state_dim)
    : mean_(std::move(mean)),
      log_std_(std::move(log_std)),
      fields_(std::move(fields)),
      bounds_(std::move(bounds)),
      state_dim_(state_dim) {}

Vector ActorPolicy::mean(const Vector& s, const Vector& g) const {
  if (static_cast<std::size_t>(s.size()) != state_dim_) throw ShapeError("policy: state has the wrong length");
  ad::Mat x(1, s.size() + g.size());
  x << s.transpose(), g.transpose();
  return mean_.forward(x).row(0).transpose();
}

Vector ActorPolicy::act(const Vector& s, const Vector& g, Mode mode, std::mt19937_64& rng) const {
  ad::Mat u = mean(s, g).transpose();
  if (mode == Mode::sample) {
    const ad::Mat noise = standard_normal(1, u.cols(), rng);
    u += noise.cwiseProduct(log_std_.array().exp().matrix());
  }
  return squash(u, fields_).cwiseProduct(bounds_).row(0).transpose();
}

Vector policy_act(const Actor& actor, const Vector& s, const Vector& g, ActorPolicy::Mode mode,
                  std::mt19937_64& rng) {
  return actor.freeze().act(s, g, mode, rng);
}

// ---------------------------------------------------------------------------
// Losses

ad::Mat standard_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ad::Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

ad::Var bce_from_logits(ad::Var logits) {
  const Eigen::Index b = logits.rows();
  if (logits.cols() != b) throw ShapeError("contrastive logits must be square");
  if (b < 2) throw BatchTooSmallError("contrastive losses need at least 2 rows for in-batch negatives");
  ad::Tape& tape = logits.tape();
  const ad::Mat eye = ad::Mat::Identity(b, b);
  const ad::Mat off = ad::Mat::Ones(b, b) - eye;
  const double db = static_cast<double>(b);
  ad::Var pos = ad::scale(ad::sum(ad::mul(ad::log_sigmoid(logits), tape.constant(eye))), 1.0 / db);
  ad::Var neg = ad::scale(ad::sum(ad::mul(ad::log_sigmoid(ad::neg(logits)), tape.constant(off))),
                          1.0 / (db * (db - 1.0)));
  return ad::neg(ad::add(pos, neg));
}

ad::Var infonce_from_logits(ad::Var logits) {
  const Eigen::Index b = logits.rows();
  if (logits.cols() != b) throw ShapeError("contrastive logits must be square");
  if (b < 2) throw BatchTooSmallError("contrastive losses need at least 2 rows for in-batch negatives");
  return ad::mean(ad::sub(ad::log_sum_exp(logits), ad::diag(logits)));
}

namespace {

ad::Var batch_logits(ParamBinder& bind, const Critic& critic, const ContrastiveBatch& batch) {
  if (batch.size() < 2) throw BatchTooSmallError("contrastive losses need at least 2 rows for in-batch negatives");
  ad::Tape& tape = bind.tape();
  ad::Var phi = critic.embed_state_action(bind, tape.constant(batch.states), tape.constant(batch.actions));
  ad::Var psi = critic.embed_goal(bind, tape.constant(batch.goals));
  return critic.logits(bind, phi, psi);
}

}  // namespace

ad::Var critic_bce_loss(ParamBinder& bind, const Critic& critic, const ContrastiveBatch& batch) {
  return bce_from_logits(batch_logits(bind, critic, batch));
}

ad::Var critic_infonce_loss(ParamBinder& bind, const Critic& critic, const ContrastiveBatch& batch) {
  return infonce_from_logits(batch_logits(bind, critic, batch));
}

ad::Var critic_loss(ParamBinder& bind, const Critic& critic, const ContrastiveBatch& batch, ContrastiveLoss kind) {
  return kind == ContrastiveLoss::bce ? critic_bce_loss(bind, critic, batch) : critic_infonce_loss(bind, critic, batch);
}

ActorLossTerms actor_loss(ParamBinder& actor_bind, ParamBinder& critic_bind, const Actor& actor,
                          const Critic& critic, const ad::Mat& states, const ad::Mat& goals, double alpha,
                          const ad::Mat& noise) {
  ad::Tape& tape = actor_bind.tape();
  if (&critic_bind.tape() != &tape) throw ContractError("actor and critic must be bound to the same tape");
  ad::Var s = tape.constant(states);
  ad::Var g = tape.constant(goals);
  const auto sample = actor.sample(actor_bind, s, g, noise);
  ad::Var phi = critic.embed_state_action(critic_bind, s, sample.action);
  ad::Var psi = critic.embed_goal(critic_bind, g);
  ad::Var q = critic.paired(critic_bind, phi, psi);
  ad::Var loss = ad::mean(ad::sub(ad::scale(sample.log_prob, alpha), q));
  return {loss, sample.log_prob, q};
}

ActorLossTerms actor_loss(ParamBinder& actor_bind, ParamBinder& critic_bind, const Actor& actor,
                          const Critic& critic, const ad::Mat& states, const ad::Mat& goals, double alpha,
                          std::mt19937_64& rng) {
  const ad::Mat noise = standard_normal(states.rows(), static_cast<Eigen::Index>(actor.action_dim()), rng);
  return actor_loss(actor_bind, critic_bind, actor, critic, states, goals, alpha, noise);
}

ad::Var offline_actor_loss(ParamBinder& actor_bind, ParamBinder& critic_bind, const Actor& actor,
                           const Critic& critic, const ad::Mat& states, const ad::Mat& actions_orig,
                           const ad::Mat& goals, double lambda, const ad::Mat& noise) {
  if (lambda < 0.0) throw ConfigError("offline lambda must be non-negative");
  ad::Tape& tape = actor_bind.tape();
  if (&critic_bind.tape() != &tape) throw ContractError("actor and critic must be bound to the same tape");
  ad::Var s = tape.constant(states);
  ad::Var g = tape.constant(goals);
  ad::Var bc = actor.log_prob(actor_bind, s, g, actions_orig);
  if (lambda == 0.0) return ad::neg(ad::mean(bc));
  const auto sample = actor.sample(actor_bind, s, g, noise);
  ad::Var q = critic.paired(critic_bind, critic.embed_state_action(critic_bind, s, sample.action),
                            critic.embed_goal(critic_bind, g));
  return ad::neg(ad::mean(ad::add(ad::scale(q, lambda), bc)));
}

}  // namespace ecrl
