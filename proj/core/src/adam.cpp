#include "ecrl/adam.hpp"

#include "ecrl/errors.hpp"

#include <cmath>

namespace ecrl {

void AdamState::step(std::span<Parameter* const> params, std::span<const ad::Mat> grads) {
  if (params.size() != grads.size()) throw ShapeError("adam: parameter and gradient counts differ");
  if (m_.empty()) {
    for (const Parameter* p : params) {
      m_.push_back(ad::Mat::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(ad::Mat::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (m_.size() != params.size()) throw ShapeError("adam: parameter list changed between steps");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& value = params[i]->value;
    if (grads[i].rows() != value.rows() || grads[i].cols() != value.cols() || m_[i].rows() != value.rows() ||
        m_[i].cols() != value.cols()) {
      throw ShapeError("adam: shape mismatch for parameter '" + params[i]->name + "'");
    }
  }

  ++steps_;
  const double t = static_cast<double>(steps_);
  const double bc1 = 1.0 - std::pow(hyper_.beta1, t);
  const double bc2 = 1.0 - std::pow(hyper_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = hyper_.beta1 * m_[i] + (1.0 - hyper_.beta1) * grads[i];
    v_[i] = hyper_.beta2 * v_[i] + (1.0 - hyper_.beta2) * grads[i].cwiseAbs2();
    auto m_hat = m_[i].array() / bc1;
    auto v_hat = v_[i].array() / bc2;
    params[i]->value.array() -= hyper_.learning_rate * m_hat / (v_hat.sqrt() + hyper_.epsilon);
  }
}

}  // namespace ecrl
