#pragma once

// Equivariant linear maps between direct sums of representations, built by
// projecting unconstrained weights onto the intertwiner space:
//
//   W_eq = 1/|G| sum_g rho_out(g) W rho_in(g)^T,   b_eq = 1/|G| sum_g rho_out(g) b.
//
// All representations here are orthogonal, so the projection is self-adjoint
// and its gradient is the same projection applied to the upstream gradient.

#include "ecrl/autodiff.hpp"
#include "ecrl/group.hpp"
#include "ecrl/parameter.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace ecrl {

class ProjectionPlan;

class EquivariantLinear {
 public:
  EquivariantLinear(ReprLayout in, ReprLayout out, std::string name = "linear");

  const ReprLayout& layout_in() const noexcept { return in_; }
  const ReprLayout& layout_out() const noexcept { return out_; }
  const FiniteGroup& group() const noexcept { return *in_.group(); }

  Parameter& raw_weight() noexcept { return weight_; }
  const Parameter& raw_weight() const noexcept { return weight_; }
  Parameter& raw_bias() noexcept { return bias_; }
  const Parameter& raw_bias() const noexcept { return bias_; }

  /// Projects an out x in weight onto the intertwiners (identity if projection is disabled).
  ad::Mat project_weight(const ad::Mat& raw) const;
  /// Projects a 1 x out bias onto the group-fixed subspace.
  ad::Mat project_bias(const ad::Mat& raw) const;

  /// (W_eq, b_eq) for the current raw parameters.
  std::pair<ad::Mat, ad::Mat> project() const;

  ad::Var forward(ParamBinder& bind, ad::Var x) const;
  ad::Mat forward(const ad::Mat& x) const;

  /// Debug switch: with projection off the layer is a plain dense layer.
  void set_projection_enabled(bool enabled) noexcept { project_enabled_ = enabled; }
  bool projection_enabled() const noexcept { return project_enabled_; }

  std::vector<Parameter*> parameters() { return {&weight_, &bias_}; }

 private:
  ReprLayout in_;
  ReprLayout out_;
  Parameter weight_;
  Parameter bias_;
  std::shared_ptr<const ProjectionPlan> plan_;
  bool project_enabled_ = true;
};

/// Pointwise relu on regular and trivial fields. Throws LayoutError if the
/// layout has standard (rho_1) fields, where a pointwise map is not equivariant.
ad::Var regular_nonlinearity(const ReprLayout& layout, ad::Var x);
ad::Mat regular_nonlinearity(const ReprLayout& layout, const ad::Mat& x);

/// Mean over each regular field, giving one invariant value per field.
ad::Var group_pool(const ReprLayout& layout, ad::Var x);
ad::Mat group_pool(const ReprLayout& layout, const ad::Mat& x);
/// The trivial layout produced by group_pool.
ReprLayout pooled_layout(const ReprLayout& layout);

struct InitRule {
  /// Target per-entry variance of projected weights is gain / fan_in.
  double hidden_gain = 2.0;
  double output_gain = 1.0;
};

/// Projected weights of a stack, for repeated inference without a tape.
struct FrozenStack {
  struct Layer {
    ad::Mat weight_t;  // in x out
    ad::Mat bias;      // 1 x out
    bool relu = false;
  };
  std::vector<Layer> layers;
  ad::Mat pool;  // out x K, empty when not pooling

  ad::Mat forward(const ad::Mat& x) const;
};

/// Equivariant MLP: linear layers with relu between them, optionally
/// followed by group pooling of the (regular) output.
class EncoderStack {
 public:
  EncoderStack() = default;
  EncoderStack(std::vector<ReprLayout> layouts, bool pool_output, std::string name);

  const ReprLayout& input_layout() const { return layers_.front().layout_in(); }
  /// Layout of forward()'s result (trivial if pooled).
  const ReprLayout& output_layout() const { return *output_layout_; }
  const std::vector<EquivariantLinear>& layers() const noexcept { return layers_; }
  std::vector<EquivariantLinear>& layers() noexcept { return layers_; }
  bool pooled() const noexcept { return pool_output_; }

  ad::Var forward(ParamBinder& bind, ad::Var x) const;
  ad::Mat forward(const ad::Mat& x) const;
  FrozenStack freeze() const;

  std::vector<Parameter*> parameters();
  void set_projection_enabled(bool enabled);

 private:
  std::vector<EquivariantLinear> layers_;
  bool pool_output_ = false;
  std::shared_ptr<const ReprLayout> output_layout_;
};

/// Builds a stack over `layouts` (input, hidden..., output) with raw weights
/// drawn from N(0, 1) and rescaled so that the projected weights have
/// per-entry variance gain / fan_in. Biases start at zero. Deterministic in `seed`.
EncoderStack init_stack(const std::vector<ReprLayout>& layouts, std::uint64_t seed, InitRule rule = {},
                        bool pool_output = false, const std::string& name = "stack");

}  // namespace ecrl
