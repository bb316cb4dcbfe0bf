#include "ecrl/replay.hpp"

#include "ecrl/errors.hpp"

#include <algorithm>
#include <cmath>

namespace ecrl {

std::size_t truncated_geometric(double gamma, std::size_t horizon, std::mt19937_64& rng) {
  if (horizon == 0) throw ContractError("future offset needs a horizon of at least 1");
  if (gamma <= 0.0 || horizon == 1) return 1;
  if (gamma >= 1.0) return std::uniform_int_distribution<std::size_t>(1, horizon)(rng);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  // Inverse CDF of P(k) = (1 - gamma) gamma^(k-1) / (1 - gamma^horizon).
  const double mass = -std::expm1(static_cast<double>(horizon) * std::log(gamma));
  const double k = std::floor(std::log1p(-u * mass) / std::log(gamma));
  return std::min(horizon, static_cast<std::size_t>(k) + 1);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t goal_offset, std::size_t goal_dim)
    : capacity_(capacity), goal_offset_(goal_offset), goal_dim_(goal_dim) {
  if (capacity == 0) throw ConfigError("replay capacity must be positive");
}

void ReplayBuffer::begin_episode(const Vector& state) {
  end_episode();
  Episode e;
  e.id = next_id_++;
  e.states.push_back(state);
  episodes_.push_back(std::move(e));
  open_ = true;
  offsets_dirty_ = true;
}

void ReplayBuffer::add(const Vector& action, const Vector& next_state, bool success) {
  if (!open_) throw ContractError("add() needs an open episode; call begin_episode first");
  Episode& e = episodes_.back();
  e.actions.push_back(action);
  e.states.push_back(next_state);
  e.success.push_back(success);
  ++size_;
  offsets_dirty_ = true;
  evict();
}

void ReplayBuffer::end_episode() {
  if (!open_) return;
  open_ = false;
  if (episodes_.back().length() == 0) episodes_.pop_back();
  offsets_dirty_ = true;
}

void ReplayBuffer::add_episode(Episode episode) {
  end_episode();
  if (episode.states.size() != episode.actions.size() + 1 || episode.success.size() != episode.actions.size())
    throw ShapeError("episode needs one more state than actions and one success flag per action");
  if (episode.length() == 0) return;
  next_id_ = std::max(next_id_, episode.id + 1);
  size_ += episode.length();
  episodes_.push_back(std::move(episode));
  offsets_dirty_ = true;
  evict();
}

void ReplayBuffer::evict() {
  // Drop whole episodes from the front; the newest episode always stays.
  while (size_ > capacity_ && episodes_.size() > 1) {
    size_ -= episodes_.front().length();
    episodes_.pop_front();
    offsets_dirty_ = true;
  }
}

void ReplayBuffer::refresh_offsets() const {
  if (!offsets_dirty_) return;
  offsets_.assign(episodes_.size() + 1, 0);
  for (std::size_t i = 0; i < episodes_.size(); ++i) offsets_[i + 1] = offsets_[i] + episodes_[i].length();
  offsets_dirty_ = false;
}

std::pair<std::size_t, std::size_t> ReplayBuffer::locate(std::size_t index) const {
  if (index >= size_) throw ContractError("transition index out of range");
  refresh_offsets();
  const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), index);
  const auto e = static_cast<std::size_t>(it - offsets_.begin()) - 1;
  return {e, index - offsets_[e]};
}

std::pair<std::size_t, std::size_t> ReplayBuffer::sample_index(std::mt19937_64& rng) const {
  if (size_ == 0) throw EmptyBufferError("cannot sample from an empty replay buffer");
  return locate(std::uniform_int_distribution<std::size_t>(0, size_ - 1)(rng));
}

Transition ReplayBuffer::transition(std::size_t index) const {
  const auto [e, t] = locate(index);
  const Episode& ep = episodes_[e];
  return {ep.id, t, ep.states[t], ep.actions[t], ep.states[t + 1], static_cast<bool>(ep.success[t])};
}

std::vector<Transition> ReplayBuffer::transitions() const {
  std::vector<Transition> out;
  out.reserve(size_);
  for (const Episode& ep : episodes_)
    for (std::size_t t = 0; t < ep.length(); ++t)
      out.push_back({ep.id, t, ep.states[t], ep.actions[t], ep.states[t + 1], static_cast<bool>(ep.success[t])});
  return out;
}

FuturePositive ReplayBuffer::sample_future_positive(double gamma, std::mt19937_64& rng) const {
  const auto [e, t] = sample_index(rng);
  const Episode& ep = episodes_[e];
  const std::size_t offset = truncated_geometric(gamma, ep.length() - t, rng);
  return {ep.states[t], ep.actions[t], ep.states[t + offset], offset};
}

Vector ReplayBuffer::achieved_goal(const Vector& state) const {
  return state.segment(static_cast<Eigen::Index>(goal_offset_), static_cast<Eigen::Index>(goal_dim_));
}

ContrastiveBatch ReplayBuffer::sample_contrastive(std::size_t batch, double gamma, std::mt19937_64& rng) const {
  if (size_ == 0) throw EmptyBufferError("cannot sample from an empty replay buffer");
  const Episode& first = episodes_.front();
  const auto b = static_cast<Eigen::Index>(batch);
  ContrastiveBatch out{ad::Mat(b, first.states[0].size()), ad::Mat(b, first.actions[0].size()),
                       ad::Mat(b, static_cast<Eigen::Index>(goal_dim_))};
  for (Eigen::Index i = 0; i < b; ++i) {
    const FuturePositive p = sample_future_positive(gamma, rng);
    out.states.row(i) = p.s.transpose();
    out.actions.row(i) = p.a.transpose();
    out.goals.row(i) = achieved_goal(p.s_future).transpose();
  }
  return out;
}

ContrastiveBatch ReplayBuffer::sample_final_goal(std::size_t batch, std::mt19937_64& rng) const {
  if (size_ == 0) throw EmptyBufferError("cannot sample from an empty replay buffer");
  const Episode& first = episodes_.front();
  const auto b = static_cast<Eigen::Index>(batch);
  ContrastiveBatch out{ad::Mat(b, first.states[0].size()), ad::Mat(b, first.actions[0].size()),
                       ad::Mat(b, static_cast<Eigen::Index>(goal_dim_))};
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto [e, t] = sample_index(rng);
    const Episode& ep = episodes_[e];
    out.states.row(i) = ep.states[t].transpose();
    out.actions.row(i) = ep.actions[t].transpose();
    out.goals.row(i) = achieved_goal(ep.states.back()).transpose();
  }
  return out;
}

ad::Mat ReplayBuffer::random_states(std::size_t count, std::mt19937_64& rng) const {
  if (size_ == 0) throw EmptyBufferError("cannot sample from an empty replay buffer");
  ad::Mat out(static_cast<Eigen::Index>(count), episodes_.front().states[0].size());
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const auto [e, t] = sample_index(rng);
    out.row(i) = episodes_[e].states[t].transpose();
  }
  return out;
}

ad::Mat ReplayBuffer::random_goals(std::size_t count, std::mt19937_64& rng) const {
  const ad::Mat states = random_states(count, rng);
  return states.middleCols(static_cast<Eigen::Index>(goal_offset_), static_cast<Eigen::Index>(goal_dim_));
}

}  // namespace ecrl
