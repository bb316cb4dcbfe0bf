#pragma once

// Goal-conditioned gridworld with a symmetry group acting about the centre
// cell, and a value-iteration solver for its goal-conditioned Q-function.

#include "ecrl/group.hpp"

#include <cstddef>
#include <vector>

namespace ecrl {

/// Actions: stay, +x, +y, -x, -y. Rows grow downward, so +y is row - 1.
struct TabularMDP {
  std::size_t grid = 0;
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::size_t num_goals = 0;
  double gamma = 0.0;
  GroupPtr group;
  std::vector<double> transition;  // [s][a][s']
  std::vector<double> reward;      // [s][a][goal]
  /// Per group element: image of each state / action / goal index.
  std::vector<std::vector<std::size_t>> state_perm;
  std::vector<std::vector<std::size_t>> action_perm;
  std::vector<std::vector<std::size_t>> goal_perm;

  double p(std::size_t s, std::size_t a, std::size_t s2) const {
    return transition[(s * num_actions + a) * num_states + s2];
  }
  double r(std::size_t s, std::size_t a, std::size_t g) const {
    return reward[(s * num_actions + a) * num_goals + g];
  }
};

/// Builds the n x n reach task (n odd) and checks the invariance axioms
/// exhaustively. The group must act on the lattice, i.e. have integer rho_1
/// matrices (c1, c2, c4, d1, d2, d4). Throws ConstructionError on failure.
TabularMDP build_tabular_gcgi(std::size_t n, const GroupPtr& group, double gamma);

/// Throws ConstructionError naming the first violated axiom.
void check_gcgi_axioms(const TabularMDP& mdp);

struct QTable {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::size_t num_goals = 0;
  std::vector<double> values;  // [s][a][goal]
  std::size_t iterations = 0;
  double residual = 0.0;

  double operator()(std::size_t s, std::size_t a, std::size_t g) const {
    return values[(s * num_actions + a) * num_goals + g];
  }
};

/// Iterates Q <- R + gamma P max Q until the sup-norm change is below tol.
/// Throws ConvergenceError after max_iterations.
QTable value_iteration(const TabularMDP& mdp, double tol, std::size_t max_iterations = 1000000);

/// max |Q(gs, ga, g goal) - Q(s, a, goal)| over all group elements and entries.
double q_invariance_deviation(const TabularMDP& mdp, const QTable& q);

/// Actions within tie_tol of the best Q(s, ., goal).
std::vector<std::size_t> greedy_set(const QTable& q, std::size_t s, std::size_t g, double tie_tol);

struct GreedyCheck {
  bool equivariant = true;
  std::size_t violations = 0;
};
/// Compares argmax sets at (gs, g goal) with the image under g of the set at (s, goal).
GreedyCheck check_greedy_equivariance(const TabularMDP& mdp, const QTable& q, double tie_tol);

/// Tie tolerance matching the value-iteration error bound for `tol`.
double greedy_tie_tolerance(double gamma, double tol);

}  // namespace ecrl
