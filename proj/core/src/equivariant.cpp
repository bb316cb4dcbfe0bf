#include "ecrl/equivariant.hpp"

#include "ecrl/errors.hpp"

#include <array>
#include <cmath>
#include <random>

namespace ecrl {

namespace {

std::size_t kind_index(RepKind kind) {
  switch (kind) {
    case RepKind::trivial: return 0;
    case RepKind::standard: return 1;
    case RepKind::regular: return 2;
    case RepKind::direct_sum: break;
  }
  throw LayoutError("direct-sum fields cannot appear inside a layout");
}

// Permutation realizing rho(g) for permutation-type kinds: rho(g) e_h = e_{perm[h]}.
std::vector<std::size_t> permutation_of(const FiniteGroup& group, RepKind kind, Element g) {
  if (kind == RepKind::trivial) return {0};
  const auto p = group.regular_permutation(g);
  return {p.begin(), p.end()};
}

ad::Mat pool_matrix(const ReprLayout& layout) {
  const auto k = static_cast<Eigen::Index>(layout.fields().size());
  ad::Mat pool = ad::Mat::Zero(static_cast<Eigen::Index>(layout.total_dim()), k);
  Eigen::Index col = 0;
  for (const auto& f : layout.fields()) {
    if (f.kind != RepKind::regular) {
      throw LayoutError("group pooling requires regular fields only, layout is " + layout.describe());
    }
    for (std::size_t h = 0; h < f.dim; ++h) {
      pool(static_cast<Eigen::Index>(f.offset + h), col) = 1.0 / static_cast<double>(f.dim);
    }
    ++col;
  }
  return pool;
}

void check_pointwise(const ReprLayout& layout) {
  if (layout.contains(RepKind::standard)) {
    throw LayoutError("pointwise nonlinearity is not equivariant on standard fields: " + layout.describe());
  }
}

}  // namespace

// Precomputed group-averaging operator for every (out kind, in kind) pair.
// Pairs of permutation representations (trivial, regular) average each
// weight block over orbits of index pairs; pairs involving the standard
// representation use the dense operator 1/|G| sum_g A_g ⊗ B_g on the
// row-major flattened block.
class ProjectionPlan {
 public:
  ProjectionPlan(const ReprLayout& in, const ReprLayout& out) : in_(in), out_(out) {
    const FiniteGroup& group = *in.group();
    identity_ = group.order() == 1;
    const double inv_order = 1.0 / static_cast<double>(group.order());
    for (RepKind ko : {RepKind::trivial, RepKind::standard, RepKind::regular}) {
      const std::size_t d = group.dim(ko);
      Matrix avg = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
      for (Element g = 0; g < group.order(); ++g) avg += group.matrix(ko, g);
      bias_avg_[kind_index(ko)] = avg * inv_order;
    }
    if (identity_) return;
    for (const auto& fo : out.fields()) {
      for (const auto& fi : in.fields()) {
        auto& plan = pairs_[kind_index(fo.kind)][kind_index(fi.kind)];
        if (!plan.ready) build(plan, group, fo.kind, fi.kind);
      }
    }
  }

  ad::Mat project_weight(const ad::Mat& raw) const {
    if (raw.rows() != static_cast<Eigen::Index>(out_.total_dim()) ||
        raw.cols() != static_cast<Eigen::Index>(in_.total_dim())) {
      throw ShapeError("weight shape does not match layer layouts");
    }
    if (identity_) return raw;
    ad::Mat result(raw.rows(), raw.cols());
    std::vector<double> sums;
    Eigen::VectorXd flat;
    for (const auto& fo : out_.fields()) {
      for (const auto& fi : in_.fields()) {
        const auto& plan = pairs_[kind_index(fo.kind)][kind_index(fi.kind)];
        const auto ro = static_cast<Eigen::Index>(fo.offset);
        const auto ci = static_cast<Eigen::Index>(fi.offset);
        const std::size_t di = fi.dim;
        if (plan.permutation) {
          sums.assign(plan.orbit_count, 0.0);
          for (std::size_t a = 0; a < fo.dim; ++a) {
            const double* src = &raw(ro + static_cast<Eigen::Index>(a), ci);
            const std::uint32_t* orbit = &plan.orbit_of[a * di];
            for (std::size_t b = 0; b < di; ++b) sums[orbit[b]] += src[b];
          }
          for (std::size_t o = 0; o < plan.orbit_count; ++o) sums[o] *= plan.inv_orbit_size[o];
          for (std::size_t a = 0; a < fo.dim; ++a) {
            double* dst = &result(ro + static_cast<Eigen::Index>(a), ci);
            const std::uint32_t* orbit = &plan.orbit_of[a * di];
            for (std::size_t b = 0; b < di; ++b) dst[b] = sums[orbit[b]];
          }
        } else {
          flat.resize(static_cast<Eigen::Index>(fo.dim * di));
          for (std::size_t a = 0; a < fo.dim; ++a) {
            for (std::size_t b = 0; b < di; ++b) {
              flat(static_cast<Eigen::Index>(a * di + b)) =
                  raw(ro + static_cast<Eigen::Index>(a), ci + static_cast<Eigen::Index>(b));
            }
          }
          const Eigen::VectorXd y = plan.dense * flat;
          for (std::size_t a = 0; a < fo.dim; ++a) {
            for (std::size_t b = 0; b < di; ++b) {
              result(ro + static_cast<Eigen::Index>(a), ci + static_cast<Eigen::Index>(b)) =
                  y(static_cast<Eigen::Index>(a * di + b));
            }
          }
        }
      }
    }
    return result;
  }

  ad::Mat project_bias(const ad::Mat& raw) const {
    if (raw.rows() != 1 || raw.cols() != static_cast<Eigen::Index>(out_.total_dim())) {
      throw ShapeError("bias shape does not match layer output layout");
    }
    if (identity_) return raw;
    ad::Mat result(1, raw.cols());
    for (const auto& fo : out_.fields()) {
      const auto off = static_cast<Eigen::Index>(fo.offset);
      const auto d = static_cast<Eigen::Index>(fo.dim);
      result.middleCols(off, d) = (bias_avg_[kind_index(fo.kind)] * raw.middleCols(off, d).transpose()).transpose();
    }
    return result;
  }

 private:
  struct PairPlan {
    bool ready = false;
    bool permutation = false;
    std::vector<std::uint32_t> orbit_of;
    std::vector<double> inv_orbit_size;
    std::size_t orbit_count = 0;
    Matrix dense;
  };

  static void build(PairPlan& plan, const FiniteGroup& group, RepKind ko, RepKind ki) {
    const std::size_t d_o = group.dim(ko);
    const std::size_t d_i = group.dim(ki);
    const double inv_order = 1.0 / static_cast<double>(group.order());
    plan.ready = true;
    plan.permutation = ko != RepKind::standard && ki != RepKind::standard;
    if (plan.permutation) {
      std::vector<std::vector<std::size_t>> perm_o, perm_i;
      for (Element g = 0; g < group.order(); ++g) {
        perm_o.push_back(permutation_of(group, ko, g));
        perm_i.push_back(permutation_of(group, ki, g));
      }
      constexpr auto unset = static_cast<std::uint32_t>(-1);
      plan.orbit_of.assign(d_o * d_i, unset);
      std::vector<std::size_t> sizes;
      for (std::size_t a = 0; a < d_o; ++a) {
        for (std::size_t b = 0; b < d_i; ++b) {
          if (plan.orbit_of[a * d_i + b] != unset) continue;
          const auto id = static_cast<std::uint32_t>(sizes.size());
          std::size_t size = 0;
          for (Element g = 0; g < group.order(); ++g) {
            const std::size_t e = perm_o[g][a] * d_i + perm_i[g][b];
            if (plan.orbit_of[e] == unset) {
              plan.orbit_of[e] = id;
              ++size;
            }
          }
          sizes.push_back(size);
        }
      }
      plan.orbit_count = sizes.size();
      for (std::size_t s : sizes) plan.inv_orbit_size.push_back(1.0 / static_cast<double>(s));
    } else {
      const auto n = static_cast<Eigen::Index>(d_o * d_i);
      plan.dense = Matrix::Zero(n, n);
      for (Element g = 0; g < group.order(); ++g) {
        const Matrix& A = group.matrix(ko, g);
        const Matrix& B = group.matrix(ki, g);
        for (std::size_t a = 0; a < d_o; ++a)
          for (std::size_t b = 0; b < d_i; ++b)
            for (std::size_t c = 0; c < d_o; ++c)
              for (std::size_t d = 0; d < d_i; ++d)
                plan.dense(static_cast<Eigen::Index>(a * d_i + b), static_cast<Eigen::Index>(c * d_i + d)) +=
                    A(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) *
                    B(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(d)) * inv_order;
      }
    }
  }

  ReprLayout in_;
  ReprLayout out_;
  bool identity_ = false;
  std::array<Matrix, 3> bias_avg_;
  std::array<std::array<PairPlan, 3>, 3> pairs_;
};

EquivariantLinear::EquivariantLinear(ReprLayout in, ReprLayout out, std::string name)
    : in_(std::move(in)), out_(std::move(out)) {
  if (in_.group()->name() != out_.group()->name()) {
    throw ConstructionError("layer layouts use different groups: " + in_.describe() + " -> " + out_.describe());
  }
  if (in_.total_dim() == 0 || out_.total_dim() == 0) throw ConstructionError("layer layouts must be non-empty");
  const auto o = static_cast<Eigen::Index>(out_.total_dim());
  const auto i = static_cast<Eigen::Index>(in_.total_dim());
  weight_ = {name + ".weight", ad::Mat::Zero(o, i)};
  bias_ = {name + ".bias", ad::Mat::Zero(1, o)};
  plan_ = std::make_shared<const ProjectionPlan>(in_, out_);
}

ad::Mat EquivariantLinear::project_weight(const ad::Mat& raw) const {
  return project_enabled_ ? plan_->project_weight(raw) : raw;
}

ad::Mat EquivariantLinear::project_bias(const ad::Mat& raw) const {
  return project_enabled_ ? plan_->project_bias(raw) : raw;
}

std::pair<ad::Mat, ad::Mat> EquivariantLinear::project() const {
  return {project_weight(weight_.value), project_bias(bias_.value)};
}

ad::Var EquivariantLinear::forward(ParamBinder& bind, ad::Var x) const {
  if (x.cols() != static_cast<Eigen::Index>(in_.total_dim())) {
    throw ShapeError("layer " + weight_.name + " expects width " + std::to_string(in_.total_dim()) + ", got " +
                     std::to_string(x.cols()));
  }
  ad::Var w = bind(weight_);
  ad::Var b = bind(bias_);
  if (project_enabled_) {
    auto plan = plan_;
    const auto pw = [plan](const ad::Mat& m) { return plan->project_weight(m); };
    const auto pb = [plan](const ad::Mat& m) { return plan->project_bias(m); };
    w = ad::linear_map(w, pw, pw);
    b = ad::linear_map(b, pb, pb);
  }
  return ad::add(ad::matmul_nt(x, w), b);
}

ad::Mat EquivariantLinear::forward(const ad::Mat& x) const {
  if (x.cols() != static_cast<Eigen::Index>(in_.total_dim())) {
    throw ShapeError("layer " + weight_.name + " expects width " + std::to_string(in_.total_dim()) + ", got " +
                     std::to_string(x.cols()));
  }
  const auto [w, b] = project();
  ad::Mat y(x.rows(), w.rows());
  y.noalias() = x * w.transpose();
  y.rowwise() += b.row(0);
  return y;
}

ad::Var regular_nonlinearity(const ReprLayout& layout, ad::Var x) {
  check_pointwise(layout);
  return ad::relu(x);
}

ad::Mat regular_nonlinearity(const ReprLayout& layout, const ad::Mat& x) {
  check_pointwise(layout);
  return x.cwiseMax(0.0);
}

ad::Var group_pool(const ReprLayout& layout, ad::Var x) {
  ad::Var pool = x.tape().constant(pool_matrix(layout));
  return ad::matmul(x, pool);
}

ad::Mat group_pool(const ReprLayout& layout, const ad::Mat& x) {
  return x * pool_matrix(layout);
}

ReprLayout pooled_layout(const ReprLayout& layout) {
  if (layout.count(RepKind::regular) != layout.fields().size()) {
    throw LayoutError("group pooling requires regular fields only, layout is " + layout.describe());
  }
  return ReprLayout(layout.group(), {{RepKind::trivial, layout.fields().size()}});
}

ad::Mat FrozenStack::forward(const ad::Mat& x) const {
  ad::Mat h = x;
  for (const auto& layer : layers) {
    ad::Mat y(h.rows(), layer.weight_t.cols());
    y.noalias() = h * layer.weight_t;
    y.rowwise() += layer.bias.row(0);
    if (layer.relu) y = y.cwiseMax(0.0);
    h = std::move(y);
  }
  if (pool.size() > 0) return h * pool;
  return h;
}

EncoderStack::EncoderStack(std::vector<ReprLayout> layouts, bool pool_output, std::string name)
    : pool_output_(pool_output) {
  if (layouts.size() < 2) throw ConstructionError("a stack needs at least input and output layouts");
  for (std::size_t i = 0; i + 1 < layouts.size(); ++i) {
    if (i + 2 < layouts.size()) check_pointwise(layouts[i + 1]);
    layers_.emplace_back(layouts[i], layouts[i + 1], name + ".l" + std::to_string(i));
  }
  output_layout_ = std::make_shared<const ReprLayout>(pool_output ? pooled_layout(layouts.back()) : layouts.back());
}

ad::Var EncoderStack::forward(ParamBinder& bind, ad::Var x) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i].forward(bind, x);
    if (i + 1 < layers_.size()) x = regular_nonlinearity(layers_[i].layout_out(), x);
  }
  if (pool_output_) x = group_pool(layers_.back().layout_out(), x);
  return x;
}

ad::Mat EncoderStack::forward(const ad::Mat& x) const { return freeze().forward(x); }

FrozenStack EncoderStack::freeze() const {
  FrozenStack frozen;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto [w, b] = layers_[i].project();
    frozen.layers.push_back({w.transpose(), std::move(b), i + 1 < layers_.size()});
  }
  if (pool_output_) frozen.pool = pool_matrix(layers_.back().layout_out());
  return frozen;
}

std::vector<Parameter*> EncoderStack::parameters() {
  std::vector<Parameter*> params;
  for (auto& layer : layers_) {
    for (Parameter* p : layer.parameters()) params.push_back(p);
  }
  return params;
}

void EncoderStack::set_projection_enabled(bool enabled) {
  for (auto& layer : layers_) layer.set_projection_enabled(enabled);
}

EncoderStack init_stack(const std::vector<ReprLayout>& layouts, std::uint64_t seed, InitRule rule, bool pool_output,
                        const std::string& name) {
  EncoderStack stack(layouts, pool_output, name);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto& layers = stack.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& w = layers[i].raw_weight().value;
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = normal(rng);
    const double projected_var = layers[i].project_weight(w).array().square().mean();
    const double gain = i + 1 < layers.size() ? rule.hidden_gain : rule.output_gain;
    const double fan_in = static_cast<double>(w.cols());
    if (projected_var > 0.0) w *= std::sqrt(gain / fan_in / projected_var);
  }
  return stack;
}

}  // namespace ecrl
