#pragma once

#include "ecrl/autodiff.hpp"

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace ecrl {

/// A named trainable array owned by a network.
struct Parameter {
  std::string name;
  ad::Mat value;
};

/// Places parameters on a tape, once each. With `trainable == false` they are
/// recorded as constants so backward never computes their gradients.
class ParamBinder {
 public:
  explicit ParamBinder(ad::Tape& tape, bool trainable = true) : tape_(&tape), trainable_(trainable) {}

  ad::Var operator()(const Parameter& p);

  ad::Tape& tape() const noexcept { return *tape_; }
  bool trainable() const noexcept { return trainable_; }

  /// Gradients in the order of `params` after backward(); zeros for parameters never bound.
  std::vector<ad::Mat> gradients(std::span<Parameter* const> params) const;

 private:
  ad::Tape* tape_;
  bool trainable_;
  std::unordered_map<const Parameter*, ad::Var> bound_;
};

}  // namespace ecrl
