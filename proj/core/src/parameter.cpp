#include "ecrl/parameter.hpp"

namespace ecrl {

ad::Var ParamBinder::operator()(const Parameter& p) {
  if (auto it = bound_.find(&p); it != bound_.end()) return it->second;
  ad::Var v = trainable_ ? tape_->parameter(p.value) : tape_->constant(p.value);
  bound_.emplace(&p, v);
  return v;
}

std::vector<ad::Mat> ParamBinder::gradients(std::span<Parameter* const> params) const {
  std::vector<ad::Mat> grads;
  grads.reserve(params.size());
  for (const Parameter* p : params) {
    if (auto it = bound_.find(p); it != bound_.end()) {
      grads.push_back(tape_->grad(it->second));
    } else {
      grads.push_back(ad::Mat::Zero(p->value.rows(), p->value.cols()));
    }
  }
  return grads;
}

}  // namespace ecrl
