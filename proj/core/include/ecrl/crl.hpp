#pragma once

// Contrastive critic f(s, a, g) = sim(phi(s, a), psi(g)), the Gaussian actor,
// and the contrastive, actor and offline objectives.

#include "ecrl/autodiff.hpp"
#include "ecrl/equivariant.hpp"
#include "ecrl/group.hpp"
#include "ecrl/parameter.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace ecrl {

enum class Variant { ecrl, crl, pooled };
enum class Metric { dot, l2 };
enum class ContrastiveLoss { bce, infonce };
enum class ActorKind { automatic, equivariant, plain };

std::string to_string(Variant v);
std::string to_string(Metric m);
std::string to_string(ContrastiveLoss l);
std::string to_string(ActorKind a);
Variant parse_variant(std::string_view s);
Metric parse_metric(std::string_view s);
ContrastiveLoss parse_loss(std::string_view s);
ActorKind parse_actor_kind(std::string_view s);

/// Block structure of an environment's state, action and goal vectors.
struct SpaceBlocks {
  std::vector<ReprBlock> state;
  std::vector<ReprBlock> action;
  std::vector<ReprBlock> goal;
};

struct NetworkConfig {
  GroupPtr group = make_cyclic_group(8);
  Variant variant = Variant::ecrl;
  Metric metric = Metric::dot;
  ActorKind actor = ActorKind::automatic;
  /// Regular fields K in each embedding (ecrl, pooled).
  std::size_t repr_k = 16;
  /// Embedding width of the plain critic.
  std::size_t repr_dim_plain = 64;
  /// Regular fields per hidden layer of equivariant networks.
  std::size_t hidden_blocks = 32;
  std::size_t hidden_width_plain = 256;
  std::size_t hidden_layers = 2;
  double init_log_std = 0.0;
  double min_log_std = -13.815510557964274;  // log(1e-6)
  double max_log_std = 2.0;

  /// Whether the actor is equivariant once `actor == automatic` is resolved.
  bool equivariant_actor() const;
};

/// Rotation-invariant (ecrl), pooled-invariant or plain contrastive critic.
class Critic {
 public:
  Critic(const NetworkConfig& config, const SpaceBlocks& spaces, std::uint64_t seed);

  Variant variant() const noexcept { return variant_; }
  Metric metric() const noexcept { return metric_; }
  const EncoderStack& phi() const noexcept { return phi_; }
  const EncoderStack& psi() const noexcept { return psi_; }
  EncoderStack& phi() noexcept { return phi_; }
  EncoderStack& psi() noexcept { return psi_; }
  std::size_t embedding_dim() const { return phi_.output_layout().total_dim(); }

  /// Layouts of environment vectors under the symmetry group (independent of variant).
  const ReprLayout& state_layout() const noexcept { return state_layout_; }
  const ReprLayout& action_layout() const noexcept { return action_layout_; }
  const ReprLayout& goal_layout() const noexcept { return goal_layout_; }

  ad::Var embed_state_action(ParamBinder& bind, ad::Var states, ad::Var actions) const;
  ad::Var embed_goal(ParamBinder& bind, ad::Var goals) const;
  /// B x B matrix of f(s_i, a_i, g_j).
  ad::Var logits(ParamBinder& bind, ad::Var phi, ad::Var psi) const;
  /// B x 1 column of f(s_i, a_i, g_i).
  ad::Var paired(ParamBinder& bind, ad::Var phi, ad::Var psi) const;

  /// Single-sample f(s, a, g).
  double similarity(const Vector& s, const Vector& a, const Vector& g) const;
  /// Row-wise f for batches, without a tape.
  Vector similarity(const ad::Mat& states, const ad::Mat& actions, const ad::Mat& goals) const;

  /// l2 metric parameters: f = -softplus(scale_raw) |phi - psi| + shift.
  Parameter& l2_scale_raw() noexcept { return l2_scale_; }
  Parameter& l2_shift() noexcept { return l2_shift_; }

  std::vector<Parameter*> parameters();
  void set_projection_enabled(bool enabled);

 private:
  Variant variant_;
  Metric metric_;
  ReprLayout state_layout_;
  ReprLayout action_layout_;
  ReprLayout goal_layout_;
  EncoderStack phi_;
  EncoderStack psi_;
  Parameter l2_scale_;
  Parameter l2_shift_;
};

/// Squashing applied per action field: size-1 fields use tanh, size-2 (rho_1)
/// fields use the radial map u -> tanh(|u|) u / |u|, which commutes with rotations.
struct SquashFields {
  std::vector<std::size_t> sizes;
  std::size_t dim() const;
  static SquashFields from_blocks(const std::vector<ReprBlock>& blocks);
};

ad::Var squash(ad::Var u, const SquashFields& fields);
/// Per-row log|det d squash / du| (B x 1).
ad::Var squash_log_det(ad::Var u, const SquashFields& fields);
ad::Mat squash(const ad::Mat& u, const SquashFields& fields);
/// Inverse of squash; inputs are pulled inside the open unit ball first.
ad::Mat unsquash(const ad::Mat& a, const SquashFields& fields);

/// Tanh-squashed Gaussian policy pi(a | s, g) with a state-independent,
/// per-field log standard deviation.
class Actor;

/// Projected copy of an actor for fast rollouts.
class ActorPolicy {
 public:
  enum class Mode { sample, mean };

  ActorPolicy() = default;
  ActorPolicy(FrozenStack mean, ad::Mat log_std, SquashFields fields, ad::Mat bounds, std::size_t state_dim);

  Vector act(const Vector& s, const Vector& g, Mode mode, std::mt19937_64& rng) const;
  /// Pre-squash mean for a single (s, g).
  Vector mean(const Vector& s, const Vector& g) const;

 private:
  FrozenStack mean_;
  ad::Mat log_std_;  // 1 x action_dim
  SquashFields fields_;
  ad::Mat bounds_;  // 1 x action_dim
  std::size_t state_dim_ = 0;
};

class Actor {
 public:
  Actor(const NetworkConfig& config, const SpaceBlocks& spaces, std::uint64_t seed);

  bool equivariant() const noexcept { return equivariant_; }
  const EncoderStack& mean_net() const noexcept { return mean_; }
  EncoderStack& mean_net() noexcept { return mean_; }
  const SquashFields& fields() const noexcept { return fields_; }
  std::size_t action_dim() const noexcept { return fields_.dim(); }
  const ReprLayout& action_layout() const noexcept { return action_layout_; }
  const ReprLayout& state_layout() const noexcept { return state_layout_; }
  const ReprLayout& goal_layout() const noexcept { return goal_layout_; }

  Parameter& log_std_param() noexcept { return log_std_; }
  const Parameter& log_std_param() const noexcept { return log_std_; }
  /// Per-dimension half-widths; rho_1 fields use the same radius for both coordinates.
  ad::Mat& bounds() noexcept { return bounds_; }
  /// Disables the lower log-std clamp (used to take sigma -> 0 in tests).
  void set_min_log_std(double v) noexcept { min_log_std_ = v; }

  ad::Var mean_forward(ParamBinder& bind, ad::Var states, ad::Var goals) const;
  /// Clamped log-std expanded to 1 x action_dim.
  ad::Var log_std(ParamBinder& bind) const;

  struct Sample {
    ad::Var action;    // scaled to bounds
    ad::Var log_prob;  // B x 1
  };
  /// Reparameterized sample a = bounds * squash(mean + sigma * noise).
  Sample sample(ParamBinder& bind, ad::Var states, ad::Var goals, const ad::Mat& noise) const;
  /// log pi(actions | s, g) for given (already bounded) actions.
  ad::Var log_prob(ParamBinder& bind, ad::Var states, ad::Var goals, const ad::Mat& actions) const;

  ActorPolicy freeze() const;

  std::vector<Parameter*> parameters();
  void set_projection_enabled(bool enabled) { mean_.set_projection_enabled(enabled); }

 private:
  bool equivariant_;
  ReprLayout state_layout_;
  ReprLayout action_layout_;
  ReprLayout goal_layout_;
  EncoderStack mean_;
  SquashFields fields_;
  ad::Mat expand_;  // n_fields x action_dim selector for the shared log-std
  Parameter log_std_;
  ad::Mat bounds_;
  double min_log_std_;
  double max_log_std_;
};

/// s, a and the positive goal (a future achieved goal) for each row.
struct ContrastiveBatch {
  ad::Mat states;
  ad::Mat actions;
  ad::Mat goals;
  Eigen::Index size() const { return states.rows(); }
};

/// Binary NCE on a B x B logit matrix: positives on the diagonal, the other
/// rows' positives as negatives.
ad::Var bce_from_logits(ad::Var logits);
/// Row-wise softmax cross-entropy with the diagonal as target.
ad::Var infonce_from_logits(ad::Var logits);

ad::Var critic_bce_loss(ParamBinder& bind, const Critic& critic, const ContrastiveBatch& batch);
ad::Var critic_infonce_loss(ParamBinder& bind, const Critic& critic, const ContrastiveBatch& batch);
ad::Var critic_loss(ParamBinder& bind, const Critic& critic, const ContrastiveBatch& batch, ContrastiveLoss kind);

struct ActorLossTerms {
  ad::Var loss;
  ad::Var log_prob;  // B x 1
  ad::Var q;         // B x 1 critic values of the sampled actions
};

/// -mean[f(s, a~, g) - alpha log pi(a~ | s, g)] with a~ reparameterized from `noise`.
ActorLossTerms actor_loss(ParamBinder& actor_bind, ParamBinder& critic_bind, const Actor& actor,
                          const Critic& critic, const ad::Mat& states, const ad::Mat& goals, double alpha,
                          const ad::Mat& noise);
ActorLossTerms actor_loss(ParamBinder& actor_bind, ParamBinder& critic_bind, const Actor& actor,
                          const Critic& critic, const ad::Mat& states, const ad::Mat& goals, double alpha,
                          std::mt19937_64& rng);

/// -mean[lambda f(s, a~, g) + log pi(a_orig | s, g)]. Throws ConfigError for lambda < 0.
ad::Var offline_actor_loss(ParamBinder& actor_bind, ParamBinder& critic_bind, const Actor& actor,
                           const Critic& critic, const ad::Mat& states, const ad::Mat& actions_orig,
                           const ad::Mat& goals, double lambda, const ad::Mat& noise);

ad::Mat standard_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

ActorPolicy::Mode parse_policy_mode(std::string_view s);
Vector policy_act(const Actor& actor, const Vector& s, const Vector& g, ActorPolicy::Mode mode,
                  std::mt19937_64& rng);

}  // namespace ecrl
