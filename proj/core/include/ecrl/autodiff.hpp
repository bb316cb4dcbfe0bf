#pragma once

// Minimal dense reverse-mode differentiation on a dynamic tape.
//
// Every value is a row-major 2-D array of doubles (rows = batch). Operations
// append a node holding the forward value and a closure that scatters the
// node's upstream gradient into its inputs. Nodes that do not depend on any
// parameter are never visited during backward.

#include "ecrl/group.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ecrl::ad {

using Mat = RowMatrix;
using Index = Eigen::Index;

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid as long as the tape lives.
class Var {
 public:
  Var() = default;

  const Mat& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double item() const;
  bool requires_grad() const;

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  /// Receives the node's upstream gradient; accumulates into inputs via accumulate().
  using BackwardFn = std::function<void(Tape&, const Mat& upstream)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Mat value);
  Var parameter(Mat value);
  /// Appends an operation result. `backward` is dropped when no input requires grad.
  Var record(Mat value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Mat value, std::span<const Var> inputs, BackwardFn backward);

  /// Reverse sweep from a 1x1 node. Gradients from earlier sweeps are cleared.
  void backward(Var loss);

  /// Gradient of the last backward() w.r.t. `v`; zeros if `v` was not reached.
  Mat grad(Var v) const;
  void accumulate(Var target, const Mat& contribution);

  const Mat& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    bool has_grad = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
  };

  void check(Var v) const;

  std::vector<Node> nodes_;
};

Var matmul(Var a, Var b);
/// a * b^T
Var matmul_nt(Var a, Var b);
/// Elementwise a + b; b may also be a 1xC row (broadcast over rows) or 1x1.
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise a * b; b may also be 1xC, Rx1 or 1x1.
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var shift(Var a, double c);
Var neg(Var a);
Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
Var slice(Var a, Index col, Index count);
Var relu(Var a);
Var tanh(Var a);
Var square(Var a);
Var exp(Var a);
Var log(Var a);
/// sqrt with a zero subgradient at 0.
Var sqrt(Var a);
Var softplus(Var a);
/// Clamp with zero gradient outside [lo, hi].
Var clamp(Var a, double lo, double hi);
/// Sum of all entries (1x1).
Var sum(Var a);
/// Mean of all entries (1x1).
Var mean(Var a);
/// Per-row sum (Rx1).
Var row_sum(Var a);
Var log_sigmoid(Var a);
/// Row-wise log-sum-exp (Rx1).
Var log_sum_exp(Var a);
/// Diagonal of a square matrix as a column (Rx1).
Var diag(Var a);
/// D[i][j] = |a_i - b_j|^2 over rows of a (RxD) and b (SxD).
Var pairwise_sq_dist(Var a, Var b);
/// Per-row diagonal Gaussian log-density sum_j log N(x_ij; mean_ij, exp(log_std_j)) (Rx1).
/// log_std may be 1xC or RxC.
Var gaussian_log_prob(Var x, Var mean, Var log_std);
/// Per-row sum_j log(1 - tanh(u_ij)^2): the log-Jacobian of elementwise tanh squashing (Rx1).
Var tanh_log_det(Var u);
/// y = f(x) for a linear map f with adjoint `adjoint` (used for weight projections).
Var linear_map(Var x, std::function<Mat(const Mat&)> forward, std::function<Mat(const Mat&)> adjoint);

}  // namespace ecrl::ad
