#pragma once

// Episode-structured replay with truncated-geometric future-state positives.

#include "ecrl/crl.hpp"
#include "ecrl/group.hpp"

#include <cstddef>
#include <cstdint>
#include <deque>
#include <random>
#include <vector>

namespace ecrl {

struct Episode {
  std::uint64_t id = 0;
  std::vector<Vector> states;   // length() + 1 entries
  std::vector<Vector> actions;  // length() entries
  std::vector<bool> success;    // per transition, evaluated at the next state
  std::size_t length() const noexcept { return actions.size(); }
};

struct Transition {
  std::uint64_t episode = 0;
  std::size_t t = 0;
  Vector s;
  Vector a;
  Vector s_next;
  bool success = false;
};

struct FuturePositive {
  Vector s;
  Vector a;
  Vector s_future;
  std::size_t offset = 0;
};

/// Draws the offset in {1..horizon} with P(k) proportional to gamma^(k-1).
/// Equivalent to resampling Geometric(1 - gamma) until it fits.
std::size_t truncated_geometric(double gamma, std::size_t horizon, std::mt19937_64& rng);

/// FIFO over whole episodes. The episode being collected is sampleable as
/// soon as it has a transition.
class ReplayBuffer {
 public:
  /// `goal_offset`/`goal_dim` locate the achieved goal inside a state.
  ReplayBuffer(std::size_t capacity, std::size_t goal_offset, std::size_t goal_dim);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }
  std::size_t episode_count() const noexcept { return episodes_.size(); }
  const std::deque<Episode>& episodes() const noexcept { return episodes_; }

  /// Opens an episode starting at `state` (closing any open one).
  void begin_episode(const Vector& state);
  void add(const Vector& action, const Vector& next_state, bool success);
  void end_episode();
  /// Appends a complete episode.
  void add_episode(Episode episode);

  Transition transition(std::size_t index) const;
  std::vector<Transition> transitions() const;

  FuturePositive sample_future_positive(double gamma, std::mt19937_64& rng) const;
  /// Positives relabelled with the achieved goal of a future state.
  ContrastiveBatch sample_contrastive(std::size_t batch, double gamma, std::mt19937_64& rng) const;
  /// Same rows relabelled with the final achieved goal of each episode.
  ContrastiveBatch sample_final_goal(std::size_t batch, std::mt19937_64& rng) const;
  /// Uniformly drawn stored states (rows).
  ad::Mat random_states(std::size_t count, std::mt19937_64& rng) const;
  /// Achieved goals of uniformly drawn stored states (rows).
  ad::Mat random_goals(std::size_t count, std::mt19937_64& rng) const;

  Vector achieved_goal(const Vector& state) const;

 private:
  std::pair<std::size_t, std::size_t> locate(std::size_t index) const;
  std::pair<std::size_t, std::size_t> sample_index(std::mt19937_64& rng) const;
  void evict();
  void refresh_offsets() const;

  std::size_t capacity_;
  std::size_t goal_offset_;
  std::size_t goal_dim_;
  std::deque<Episode> episodes_;
  bool open_ = false;
  std::uint64_t next_id_ = 0;
  std::size_t size_ = 0;
  mutable std::vector<std::size_t> offsets_;
  mutable bool offsets_dirty_ = true;
};

}  // namespace ecrl
