#pragma once

#include "ecrl/parameter.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace ecrl {

struct AdamHyper {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam moments for an ordered parameter list. The list order must stay fixed
/// across steps; moments are allocated on the first step.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(AdamHyper hyper) : hyper_(hyper) {}

  /// One Adam update; throws ShapeError if a gradient does not match its parameter.
  void step(std::span<Parameter* const> params, std::span<const ad::Mat> grads);

  std::size_t step_count() const noexcept { return steps_; }
  const AdamHyper& hyper() const noexcept { return hyper_; }
  AdamHyper& hyper() noexcept { return hyper_; }
  const std::vector<ad::Mat>& first_moments() const noexcept { return m_; }
  const std::vector<ad::Mat>& second_moments() const noexcept { return v_; }

 private:
  AdamHyper hyper_;
  std::size_t steps_ = 0;
  std::vector<ad::Mat> m_;
  std::vector<ad::Mat> v_;
};

}  // namespace ecrl
