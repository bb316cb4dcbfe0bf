#include "ecrl/tabular.hpp"

#include "ecrl/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace ecrl {

namespace {

constexpr std::array<std::array<int, 2>, 5> kMoves{{{0, 0}, {1, 0}, {0, 1}, {-1, 0}, {0, -1}}};

int to_int(double v) {
  const double r = std::round(v);
  if (std::abs(v - r) > 1e-9) throw ConstructionError("group does not act on the integer lattice");
  return static_cast<int>(r);
}

std::size_t move_index(int dx, int dy) {
  for (std::size_t a = 0; a < kMoves.size(); ++a)
    if (kMoves[a][0] == dx && kMoves[a][1] == dy) return a;
  throw ConstructionError("group maps a move outside the action set");
}

}  // namespace

TabularMDP build_tabular_gcgi(std::size_t n, const GroupPtr& group, double gamma) {
  if (n == 0 || n % 2 == 0) throw ConstructionError("grid size must be odd, got " + std::to_string(n));
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConstructionError("gamma must lie in [0, 1)");
  TabularMDP mdp;
  mdp.grid = n;
  mdp.num_states = n * n;
  mdp.num_actions = kMoves.size();
  mdp.num_goals = n * n;
  mdp.gamma = gamma;
  mdp.group = group;

  const int c = static_cast<int>(n / 2);
  // Cell (row, col) has coordinates x = col - c, y = c - row.
  auto index = [&](int x, int y) { return static_cast<std::size_t>((c - y) * static_cast<int>(n) + (x + c)); };
  auto coords = [&](std::size_t s) {
    const int row = static_cast<int>(s / n), col = static_cast<int>(s % n);
    return std::array<int, 2>{col - c, c - row};
  };
  auto clamp = [&](int v) { return std::clamp(v, -c, c); };

  mdp.transition.assign(mdp.num_states * mdp.num_actions * mdp.num_states, 0.0);
  mdp.reward.assign(mdp.num_states * mdp.num_actions * mdp.num_goals, 0.0);
  for (std::size_t s = 0; s < mdp.num_states; ++s) {
    const auto [x, y] = coords(s);
    for (std::size_t a = 0; a < mdp.num_actions; ++a) {
      const std::size_t next = index(clamp(x + kMoves[a][0]), clamp(y + kMoves[a][1]));
      mdp.transition[(s * mdp.num_actions + a) * mdp.num_states + next] = 1.0;
      mdp.reward[(s * mdp.num_actions + a) * mdp.num_goals + next] = 1.0;
    }
  }

  for (Element g = 0; g < group->order(); ++g) {
    const Matrix m = group->matrix(RepKind::standard, g);
    const int m00 = to_int(m(0, 0)), m01 = to_int(m(0, 1)), m10 = to_int(m(1, 0)), m11 = to_int(m(1, 1));
    std::vector<std::size_t> sp(mdp.num_states), ap(mdp.num_actions);
    for (std::size_t s = 0; s < mdp.num_states; ++s) {
      const auto [x, y] = coords(s);
      sp[s] = index(m00 * x + m01 * y, m10 * x + m11 * y);
    }
    for (std::size_t a = 0; a < mdp.num_actions; ++a) {
      const int dx = kMoves[a][0], dy = kMoves[a][1];
      ap[a] = move_index(m00 * dx + m01 * dy, m10 * dx + m11 * dy);
    }
    mdp.state_perm.push_back(sp);
    mdp.goal_perm.push_back(sp);
    mdp.action_perm.push_back(ap);
  }
  check_gcgi_axioms(mdp);
  return mdp;
}

void check_gcgi_axioms(const TabularMDP& mdp) {
  auto is_bijection = [](const std::vector<std::size_t>& perm) {
    std::vector<bool> seen(perm.size(), false);
    for (std::size_t v : perm) {
      if (v >= perm.size() || seen[v]) return false;
      seen[v] = true;
    }
    return true;
  };
  for (std::size_t s = 0; s < mdp.num_states; ++s)
    for (std::size_t a = 0; a < mdp.num_actions; ++a) {
      double total = 0.0;
      for (std::size_t s2 = 0; s2 < mdp.num_states; ++s2) total += mdp.p(s, a, s2);
      if (std::abs(total - 1.0) > 1e-12) throw ConstructionError("transition row does not sum to 1");
    }
  for (std::size_t g = 0; g < mdp.state_perm.size(); ++g) {
    const auto& sp = mdp.state_perm[g];
    const auto& ap = mdp.action_perm[g];
    const auto& gp = mdp.goal_perm[g];
    if (!is_bijection(sp) || !is_bijection(ap) || !is_bijection(gp))
      throw ConstructionError("group table is not a bijection for element " + std::to_string(g));
    for (std::size_t s = 0; s < mdp.num_states; ++s)
      for (std::size_t a = 0; a < mdp.num_actions; ++a) {
        for (std::size_t s2 = 0; s2 < mdp.num_states; ++s2)
          if (mdp.p(sp[s], ap[a], sp[s2]) != mdp.p(s, a, s2))
            throw ConstructionError("transition invariance fails for element " + std::to_string(g));
        for (std::size_t goal = 0; goal < mdp.num_goals; ++goal)
          if (mdp.r(sp[s], ap[a], gp[goal]) != mdp.r(s, a, goal))
            throw ConstructionError("reward invariance fails for element " + std::to_string(g));
      }
  }
}

QTable value_iteration(const TabularMDP& mdp, double tol, std::size_t max_iterations) {
  if (!(tol > 0)) throw ContractError("value iteration tolerance must be positive");
  const std::size_t ns = mdp.num_states, na = mdp.num_actions, ng = mdp.num_goals;
  QTable q{ns, na, ng, std::vector<double>(ns * na * ng, 0.0), 0, 0.0};

  // Sparse successor lists.
  std::vector<std::vector<std::pair<std::size_t, double>>> succ(ns * na);
  for (std::size_t s = 0; s < ns; ++s)
    for (std::size_t a = 0; a < na; ++a)
      for (std::size_t s2 = 0; s2 < ns; ++s2)
        if (const double p = mdp.p(s, a, s2); p != 0.0) succ[s * na + a].push_back({s2, p});

  std::vector<double> v(ns * ng, 0.0);
  std::vector<double> next(q.values.size());
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    for (std::size_t s = 0; s < ns; ++s)
      for (std::size_t g = 0; g < ng; ++g) {
        double best = q(s, 0, g);
        for (std::size_t a = 1; a < na; ++a) best = std::max(best, q(s, a, g));
        v[s * ng + g] = best;
      }
    double residual = 0.0;
    for (std::size_t s = 0; s < ns; ++s)
      for (std::size_t a = 0; a < na; ++a)
        for (std::size_t g = 0; g < ng; ++g) {
          double expect = 0.0;
          for (const auto& [s2, p] : succ[s * na + a]) expect += p * v[s2 * ng + g];
          const std::size_t k = (s * na + a) * ng + g;
          next[k] = mdp.reward[k] + mdp.gamma * expect;
          residual = std::max(residual, std::abs(next[k] - q.values[k]));
        }
    q.values.swap(next);
    q.iterations = it;
    q.residual = residual;
    if (residual < tol) return q;
  }
  throw ConvergenceError("value iteration did not reach residual " + std::to_string(tol) + " within " +
                         std::to_string(max_iterations) + " iterations (last residual " +
                         std::to_string(q.residual) + ")");
}

double q_invariance_deviation(const TabularMDP& mdp, const QTable& q) {
  double dev = 0.0;
  for (std::size_t g = 0; g < mdp.state_perm.size(); ++g)
    for (std::size_t s = 0; s < q.num_states; ++s)
      for (std::size_t a = 0; a < q.num_actions; ++a)
        for (std::size_t goal = 0; goal < q.num_goals; ++goal)
          dev = std::max(dev, std::abs(q(mdp.state_perm[g][s], mdp.action_perm[g][a], mdp.goal_perm[g][goal]) -
                                       q(s, a, goal)));
  return dev;
}

std::vector<std::size_t> greedy_set(const QTable& q, std::size_t s, std::size_t g, double tie_tol) {
  double best = q(s, 0, g);
  for (std::size_t a = 1; a < q.num_actions; ++a) best = std::max(best, q(s, a, g));
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < q.num_actions; ++a)
    if (q(s, a, g) >= best - tie_tol) out.push_back(a);
  return out;
}

GreedyCheck check_greedy_equivariance(const TabularMDP& mdp, const QTable& q, double tie_tol) {
  GreedyCheck result;
  for (std::size_t g = 0; g < mdp.state_perm.size(); ++g)
    for (std::size_t s = 0; s < q.num_states; ++s)
      for (std::size_t goal = 0; goal < q.num_goals; ++goal) {
        std::vector<std::size_t> mapped;
        for (std::size_t a : greedy_set(q, s, goal, tie_tol)) mapped.push_back(mdp.action_perm[g][a]);
        std::sort(mapped.begin(), mapped.end());
        if (mapped != greedy_set(q, mdp.state_perm[g][s], mdp.goal_perm[g][goal], tie_tol)) {
          result.equivariant = false;
          ++result.violations;
        }
      }
  return result;
}

double greedy_tie_tolerance(double gamma, double tol) {
  if (gamma <= 0.0) return 1e-12;
  return 2.0 * gamma * tol / (1.0 - gamma) + 1e-12;
}

}  // namespace ecrl
