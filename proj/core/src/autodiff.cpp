#include "ecrl/autodiff.hpp"

#include "ecrl/errors.hpp"

#include <cmath>
#include <numbers>

namespace ecrl::ad {

namespace {

std::string shape_str(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

[[noreturn]] void shape_error(const char* op, const Mat& a, const Mat& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

enum class Broadcast { same, row, col, scalar };

Broadcast broadcast_kind(const char* op, const Mat& a, const Mat& b) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::same;
  if (b.rows() == 1 && b.cols() == 1) return Broadcast::scalar;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::row;
  if (b.cols() == 1 && b.rows() == a.rows()) return Broadcast::col;
  shape_error(op, a, b);
}

// Expands b to the shape of a.
Mat expand(const Mat& b, Broadcast kind, Index rows, Index cols) {
  switch (kind) {
    case Broadcast::same: return b;
    case Broadcast::row: return b.replicate(rows, 1);
    case Broadcast::col: return b.replicate(1, cols);
    case Broadcast::scalar: return Mat::Constant(rows, cols, b(0, 0));
  }
  return b;
}

// Sums a full-shape gradient down to the broadcast operand's shape.
Mat reduce(const Mat& g, Broadcast kind) {
  switch (kind) {
    case Broadcast::same: return g;
    case Broadcast::row: return g.colwise().sum();
    case Broadcast::col: return g.rowwise().sum();
    case Broadcast::scalar: return Mat::Constant(1, 1, g.sum());
  }
  return g;
}

// log(sigmoid(x)) = -softplus(-x), computed without overflow.
double log_sigmoid_scalar(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_scalar(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace

const Mat& Var::value() const {
  if (!tape_) throw ContractError("use of an unbound Var");
  return tape_->value(id_);
}

double Var::item() const {
  const Mat& v = value();
  if (v.size() != 1) throw ContractError("item() requires a 1x1 value, got " + shape_str(v));
  return v(0, 0);
}

bool Var::requires_grad() const { return tape_ && tape_->requires_grad(id_); }

void Tape::check(Var v) const {
  if (v.tape_ != this) throw ContractError("Var belongs to a different tape");
}

Var Tape::constant(Mat value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Mat value) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = true;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Mat value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
}

Var Tape::record(Mat value, std::span<const Var> inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  for (const Var& in : inputs) {
    check(in);
    node.inputs.push_back(in.id_);
    node.requires_grad = node.requires_grad || nodes_[in.id_].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var loss) {
  check(loss);
  if (nodes_[loss.id_].value.size() != 1) {
    throw ContractError("backward() requires a scalar loss, got " + shape_str(nodes_[loss.id_].value));
  }
  for (auto& node : nodes_) {
    node.has_grad = false;
    node.grad.resize(0, 0);
  }
  Node& root = nodes_[loss.id_];
  root.grad = Mat::Ones(1, 1);
  root.has_grad = true;
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.has_grad || !node.backward) continue;
    node.backward(*this, node.grad);
  }
}

Mat Tape::grad(Var v) const {
  check(v);
  const Node& node = nodes_[v.id_];
  if (!node.has_grad) return Mat::Zero(node.value.rows(), node.value.cols());
  return node.grad;
}

void Tape::accumulate(Var target, const Mat& contribution) {
  check(target);
  Node& node = nodes_[target.id_];
  if (!node.requires_grad) return;
  if (contribution.rows() != node.value.rows() || contribution.cols() != node.value.cols()) {
    throw ContractError("gradient shape " + shape_str(contribution) + " does not match value " +
                        shape_str(node.value));
  }
  if (node.has_grad) {
    node.grad += contribution;
  } else {
    node.grad = contribution;
    node.has_grad = true;
  }
}

Var matmul(Var a, Var b) {
  const Mat& av = a.value();
  const Mat& bv = b.value();
  if (av.cols() != bv.rows()) shape_error("matmul", av, bv);
  Mat out(av.rows(), bv.cols());
  out.noalias() = av * bv;
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Mat& up) {
    if (a.requires_grad()) {
      Mat ga(a.rows(), a.cols());
      ga.noalias() = up * b.value().transpose();
      t.accumulate(a, ga);
    }
    if (b.requires_grad()) {
      Mat gb(b.rows(), b.cols());
      gb.noalias() = a.value().transpose() * up;
      t.accumulate(b, gb);
    }
  });
}

Var matmul_nt(Var a, Var b) {
  const Mat& av = a.value();
  const Mat& bv = b.value();
  if (av.cols() != bv.cols()) shape_error("matmul_nt", av, bv);
  Mat out(av.rows(), bv.rows());
  out.noalias() = av * bv.transpose();
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Mat& up) {
    if (a.requires_grad()) {
      Mat ga(a.rows(), a.cols());
      ga.noalias() = up * b.value();
      t.accumulate(a, ga);
    }
    if (b.requires_grad()) {
      Mat gb(b.rows(), b.cols());
      gb.noalias() = up.transpose() * a.value();
      t.accumulate(b, gb);
    }
  });
}

Var add(Var a, Var b) {
  const Mat& av = a.value();
  const Mat& bv = b.value();
  const Broadcast kind = broadcast_kind("add", av, bv);
  Mat out = av + expand(bv, kind, av.rows(), av.cols());
  return a.tape().record(std::move(out), {a, b}, [a, b, kind](Tape& t, const Mat& up) {
    t.accumulate(a, up);
    if (b.requires_grad()) t.accumulate(b, reduce(up, kind));
  });
}

Var sub(Var a, Var b) {
  const Mat& av = a.value();
  const Mat& bv = b.value();
  const Broadcast kind = broadcast_kind("sub", av, bv);
  Mat out = av - expand(bv, kind, av.rows(), av.cols());
  return a.tape().record(std::move(out), {a, b}, [a, b, kind](Tape& t, const Mat& up) {
    t.accumulate(a, up);
    if (b.requires_grad()) t.accumulate(b, reduce(-up, kind));
  });
}

Var mul(Var a, Var b) {
  const Mat& av = a.value();
  const Mat& bv = b.value();
  const Broadcast kind = broadcast_kind("mul", av, bv);
  Mat out = av.cwiseProduct(expand(bv, kind, av.rows(), av.cols()));
  return a.tape().record(std::move(out), {a, b}, [a, b, kind](Tape& t, const Mat& up) {
    const Mat& av = a.value();
    const Mat& bv = b.value();
    if (a.requires_grad()) t.accumulate(a, up.cwiseProduct(expand(bv, kind, av.rows(), av.cols())));
    if (b.requires_grad()) t.accumulate(b, reduce(up.cwiseProduct(av), kind));
  });
}

Var scale(Var a, double c) {
  return a.tape().record(a.value() * c, {a}, [a, c](Tape& t, const Mat& up) { t.accumulate(a, up * c); });
}

Var shift(Var a, double c) {
  Mat out = a.value().array() + c;
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Mat& up) { t.accumulate(a, up); });
}

Var neg(Var a) { return scale(a, -1.0); }

Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Index rows = parts.front().rows();
  Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) shape_error("concat", parts.front().value(), p.value());
    cols += p.cols();
  }
  Mat out(rows, cols);
  Index offset = 0;
  for (const Var& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts.front().tape().record(std::move(out), parts, [inputs](Tape& t, const Mat& up) {
    Index off = 0;
    for (const Var& p : inputs) {
      if (p.requires_grad()) t.accumulate(p, up.middleCols(off, p.cols()));
      off += p.cols();
    }
  });
}

Var slice(Var a, Index col, Index count) {
  if (col < 0 || count <= 0 || col + count > a.cols()) {
    throw ShapeError("slice: columns [" + std::to_string(col) + ", " + std::to_string(col + count) +
                     ") out of range for " + shape_str(a.value()));
  }
  Mat out = a.value().middleCols(col, count);
  return a.tape().record(std::move(out), {a}, [a, col, count](Tape& t, const Mat& up) {
    Mat g = Mat::Zero(a.rows(), a.cols());
    g.middleCols(col, count) = up;
    t.accumulate(a, g);
  });
}

Var relu(Var a) {
  Mat out = a.value().cwiseMax(0.0);
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Mat& up) {
    t.accumulate(a, (a.value().array() > 0.0).select(up, 0.0));
  });
}

Var tanh(Var a) {
  Mat out = a.value().array().tanh();
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Mat& up) {
    t.accumulate(a, up.array() * (1.0 - a.value().array().tanh().square()));
  });
}

Var square(Var a) {
  Mat out = a.value().array().square();
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Mat& up) {
    t.accumulate(a, 2.0 * up.array() * a.value().array());
  });
}

Var exp(Var a) {
  Mat out = a.value().array().exp();
  Var y = a.tape().constant(out);
  return a.tape().record(std::move(out), {a}, [a, y](Tape& t, const Mat& up) {
    t.accumulate(a, up.cwiseProduct(y.value()));
  });
}

Var log(Var a) {
  Mat out = a.value().array().log();
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Mat& up) {
    t.accumulate(a, up.array() / a.value().array());
  });
}

Var sqrt(Var a) {
  Mat out = a.value().cwiseMax(0.0).array().sqrt();
  Var y = a.tape().constant(out);
  return a.tape().record(std::move(out), {a}, [a, y](Tape& t, const Mat& up) {
    const auto& yv = y.value().array();
    t.accumulate(a, (yv > 0.0).select(up.array() / (2.0 * yv), 0.0).matrix());
  });
}

Var softplus(Var a) {
  Mat out = a.value().unaryExpr([](double x) { return softplus_scalar(x); });
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Mat& up) {
    t.accumulate(a, up.cwiseProduct(a.value().unaryExpr([](double x) { return sigmoid_scalar(x); })));
  });
}

Var clamp(Var a, double lo, double hi) {
  Mat out = a.value().cwiseMax(lo).cwiseMin(hi);
  return a.tape().record(std::move(out), {a}, [a, lo, hi](Tape& t, const Mat& up) {
    const auto& v = a.value().array();
    t.accumulate(a, ((v >= lo) && (v <= hi)).select(up.array(), 0.0).matrix());
  });
}

Var sum(Var a) {
  Mat out = Mat::Constant(1, 1, a.value().sum());
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Mat& up) {
    t.accumulate(a, Mat::Constant(a.rows(), a.cols(), up(0, 0)));
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Var row_sum(Var a) {
  Mat out = a.value().rowwise().sum();
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Mat& up) {
    t.accumulate(a, up.replicate(1, a.cols()));
  });
}

Var log_sigmoid(Var a) {
  Mat out = a.value().unaryExpr([](double x) { return log_sigmoid_scalar(x); });
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Mat& up) {
    // d/dx log sigmoid(x) = sigmoid(-x)
    t.accumulate(a, up.cwiseProduct(a.value().unaryExpr([](double x) { return sigmoid_scalar(-x); })));
  });
}

Var log_sum_exp(Var a) {
  const Mat& v = a.value();
  Mat row_max = v.rowwise().maxCoeff();
  Mat shifted = v - row_max.replicate(1, v.cols());
  Mat e = shifted.array().exp();
  Mat s = e.rowwise().sum();
  Mat out = row_max.array() + s.array().log();
  // softmax weights for the backward pass
  Mat weights = e.array() / s.replicate(1, v.cols()).array();
  Var w = a.tape().constant(std::move(weights));
  return a.tape().record(std::move(out), {a}, [a, w](Tape& t, const Mat& up) {
    t.accumulate(a, w.value().cwiseProduct(up.replicate(1, a.cols())));
  });
}

Var diag(Var a) {
  if (a.rows() != a.cols()) throw ShapeError("diag: matrix is not square (" + shape_str(a.value()) + ")");
  Mat out = a.value().diagonal();
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Mat& up) {
    Mat g = Mat::Zero(a.rows(), a.cols());
    g.diagonal() = up.col(0);
    t.accumulate(a, g);
  });
}

Var pairwise_sq_dist(Var a, Var b) {
  const Mat& av = a.value();
  const Mat& bv = b.value();
  if (av.cols() != bv.cols()) shape_error("pairwise_sq_dist", av, bv);
  Mat out(av.rows(), bv.rows());
  for (Index i = 0; i < av.rows(); ++i) {
    for (Index j = 0; j < bv.rows(); ++j) out(i, j) = (av.row(i) - bv.row(j)).squaredNorm();
  }
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Mat& up) {
    const Mat& av = a.value();
    const Mat& bv = b.value();
    // d/da_i = 2 sum_j up_ij (a_i - b_j);  d/db_j = -2 sum_i up_ij (a_i - b_j)
    const Mat row_up = up.rowwise().sum();
    const Mat col_up = up.colwise().sum();
    if (a.requires_grad()) {
      Mat ga(av.rows(), av.cols());
      ga.noalias() = -2.0 * up * bv;
      ga += 2.0 * (av.array().colwise() * row_up.col(0).array()).matrix();
      t.accumulate(a, ga);
    }
    if (b.requires_grad()) {
      Mat gb(bv.rows(), bv.cols());
      gb.noalias() = -2.0 * up.transpose() * av;
      gb += 2.0 * (bv.array().colwise() * col_up.row(0).transpose().array()).matrix();
      t.accumulate(b, gb);
    }
  });
}

Var gaussian_log_prob(Var x, Var mean, Var log_std) {
  const Mat& xv = x.value();
  const Mat& mv = mean.value();
  if (xv.rows() != mv.rows() || xv.cols() != mv.cols()) shape_error("gaussian_log_prob", xv, mv);
  const Broadcast kind = broadcast_kind("gaussian_log_prob", xv, log_std.value());
  if (kind != Broadcast::same && kind != Broadcast::row) shape_error("gaussian_log_prob", xv, log_std.value());
  const Mat ls = expand(log_std.value(), kind, xv.rows(), xv.cols());
  const Mat inv_std = (-ls.array()).exp();
  const Mat z = (xv - mv).cwiseProduct(inv_std);
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  Mat per = -0.5 * z.array().square() - ls.array() - half_log_2pi;
  Mat out = per.rowwise().sum();
  Var zc = x.tape().constant(z);
  Var ic = x.tape().constant(inv_std);
  return x.tape().record(std::move(out), {x, mean, log_std}, [x, mean, log_std, kind, zc, ic](Tape& t, const Mat& up) {
    const Mat& z = zc.value();
    const Mat upb = up.replicate(1, z.cols());
    // d/dx = -z/std;  d/dmean = z/std;  d/dlog_std = z^2 - 1
    const Mat dx = -(upb.cwiseProduct(z).cwiseProduct(ic.value()));
    if (x.requires_grad()) t.accumulate(x, dx);
    if (mean.requires_grad()) t.accumulate(mean, -dx);
    if (log_std.requires_grad()) {
      Mat dl = upb.array() * (z.array().square() - 1.0);
      t.accumulate(log_std, reduce(dl, kind));
    }
  });
}

Var tanh_log_det(Var u) {
  // log(1 - tanh(x)^2) = 2 (log 2 - x - softplus(-2x))
  const double log2 = std::numbers::ln2;
  Mat per = u.value().unaryExpr([log2](double x) { return 2.0 * (log2 - x - softplus_scalar(-2.0 * x)); });
  Mat out = per.rowwise().sum();
  return u.tape().record(std::move(out), {u}, [u](Tape& t, const Mat& up) {
    Mat d = u.value().unaryExpr([](double x) { return -2.0 * std::tanh(x); });
    t.accumulate(u, d.cwiseProduct(up.replicate(1, d.cols())));
  });
}

Var linear_map(Var x, std::function<Mat(const Mat&)> forward, std::function<Mat(const Mat&)> adjoint) {
  Mat out = forward(x.value());
  return x.tape().record(std::move(out), {x}, [x, adjoint = std::move(adjoint)](Tape& t, const Mat& up) {
    t.accumulate(x, adjoint(up));
  });
}

}  // namespace ecrl::ad
