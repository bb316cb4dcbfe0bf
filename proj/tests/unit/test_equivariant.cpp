#include "ecrl/equivariant.hpp"
#include "ecrl/errors.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ecrl;
using ad::Mat;

namespace {

Mat randn(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n01(rng);
  return m;
}

// Brute-force projection: average of the dense matrices over all elements.
Mat naive_projection(const ReprLayout& in, const ReprLayout& out, const Mat& w) {
  const Representation ri = in.representation(), ro = out.representation();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(w.rows(), w.cols());
  const std::size_t n = in.group()->order();
  for (Element g = 0; g < n; ++g) acc += ro(g) * Eigen::MatrixXd(w) * ri(g).transpose();
  return acc / static_cast<double>(n);
}

std::vector<std::pair<ReprLayout, ReprLayout>> layout_pairs() {
  std::vector<std::pair<ReprLayout, ReprLayout>> out;
  for (const GroupPtr& g : {make_cyclic_group(4), make_cyclic_group(8), make_dihedral_group(4)}) {
    const ReprLayout mixed(g, {{RepKind::standard, 2}, {RepKind::trivial, 1}});
    const ReprLayout reg(g, {{RepKind::regular, 2}});
    out.emplace_back(mixed, reg);
    out.emplace_back(reg, reg);
    out.emplace_back(reg, mixed);
    out.emplace_back(mixed, mixed);
  }
  return out;
}

}  // namespace

TEST(Projection, MatchesNaiveAverageAndIsIdempotent) {
  std::mt19937_64 rng(3);
  for (const auto& [in, out] : layout_pairs()) {
    EquivariantLinear layer(in, out);
    const Mat w = randn(static_cast<Eigen::Index>(out.total_dim()), static_cast<Eigen::Index>(in.total_dim()), rng);
    const Mat p = layer.project_weight(w);
    EXPECT_LT((p - naive_projection(in, out, w)).cwiseAbs().maxCoeff(), 1e-12) << in.describe() << out.describe();
    EXPECT_LT((layer.project_weight(p) - p).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Projection, IsSelfAdjoint) {
  std::mt19937_64 rng(4);
  for (const auto& [in, out] : layout_pairs()) {
    EquivariantLinear layer(in, out);
    const auto r = static_cast<Eigen::Index>(out.total_dim()), c = static_cast<Eigen::Index>(in.total_dim());
    const Mat a = randn(r, c, rng), b = randn(r, c, rng);
    EXPECT_NEAR(layer.project_weight(a).cwiseProduct(b).sum(), a.cwiseProduct(layer.project_weight(b)).sum(), 1e-10);
  }
}

TEST(Projection, BiasLandsInFixedSubspace) {
  std::mt19937_64 rng(5);
  const GroupPtr g = make_cyclic_group(8);
  const ReprLayout out(g, {{RepKind::regular, 2}, {RepKind::standard, 1}, {RepKind::trivial, 1}});
  EquivariantLinear layer(ReprLayout(g, {{RepKind::trivial, 1}}), out);
  const Mat b = layer.project_bias(randn(1, static_cast<Eigen::Index>(out.total_dim()), rng));
  for (Element e = 0; e < g->order(); ++e) EXPECT_LT((act_on_rows(out, e, b) - b).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(std::abs(b(0, 16)) + std::abs(b(0, 17)), 1e-12);
}

TEST(Layer, EquivariantWithOracleActions) {
  std::mt19937_64 rng(6);
  const GroupPtr g = make_cyclic_group(8);
  const ReprLayout in(g, {{RepKind::standard, 1}, {RepKind::trivial, 1}});
  const ReprLayout out(g, {{RepKind::regular, 3}});
  EquivariantLinear layer(in, out);
  layer.raw_weight().value = randn(24, 3, rng);
  layer.raw_bias().value = randn(1, 24, rng);
  for (int i = 0; i < 50; ++i) {
    const Element e = rng() % 8;
    const Mat x = randn(1, 3, rng);
    oracle::Vec xv = x.row(0).transpose();
    const oracle::Vec gx = oracle::rotate_pairs(xv, 0, 1, oracle::rho1(8, false, e));
    const Mat y_gx = layer.forward(Mat(gx.transpose()));
    const Mat y = layer.forward(x);
    for (int f = 0; f < 3; ++f) {
      const oracle::Vec shifted = oracle::cyclic_shift(y.row(0).segment(8 * f, 8).transpose(), e);
      EXPECT_LT((y_gx.row(0).segment(8 * f, 8).transpose() - shifted).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Layer, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  const GroupPtr g = make_dihedral_group(4);
  const ReprLayout in(g, {{RepKind::standard, 1}, {RepKind::trivial, 1}});
  const ReprLayout out(g, {{RepKind::regular, 1}});
  EquivariantLinear layer(in, out);
  layer.raw_weight().value = randn(8, 3, rng);
  layer.raw_bias().value = randn(1, 8, rng);
  const Mat x = randn(4, 3, rng), target = randn(4, 8, rng);
  auto loss = [&] { return (layer.forward(x) - target).squaredNorm(); };
  ad::Tape tape;
  ParamBinder bind(tape);
  const ad::Var y = layer.forward(bind, tape.constant(x));
  tape.backward(ad::sum(ad::square(ad::sub(y, tape.constant(target)))));
  auto params = layer.parameters();
  const auto grads = bind.gradients(params);
  for (std::size_t p = 0; p < params.size(); ++p) {
    std::vector<std::size_t> coords(static_cast<std::size_t>(params[p]->value.size()));
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    const auto fd = oracle::central_differences(loss, params[p]->value.data(), coords);
    const std::vector<double> an(grads[p].data(), grads[p].data() + grads[p].size());
    EXPECT_LT(oracle::relative_error(an, fd), 1e-7);
  }
}

TEST(Nonlinearity, RejectsStandardFields) {
  const GroupPtr g = make_cyclic_group(4);
  const ReprLayout bad(g, {{RepKind::standard, 1}});
  EXPECT_THROW(regular_nonlinearity(bad, Mat::Zero(1, 2)), LayoutError);
  const ReprLayout ok(g, {{RepKind::regular, 1}, {RepKind::trivial, 1}});
  Mat x(1, 5);
  x << -1, 2, -3, 4, -5;
  Mat want(1, 5);
  want << 0, 2, 0, 4, 0;
  EXPECT_EQ(regular_nonlinearity(ok, x), want);
}

TEST(Pooling, AveragesEachRegularField) {
  const GroupPtr g = make_cyclic_group(4);
  const ReprLayout reg(g, {{RepKind::regular, 2}});
  Mat x(1, 8);
  x << 1, 2, 3, 4, 10, 10, 10, 14;
  const Mat p = group_pool(reg, x);
  ASSERT_EQ(p.cols(), 2);
  EXPECT_DOUBLE_EQ(p(0, 0), 2.5);
  EXPECT_DOUBLE_EQ(p(0, 1), 11.0);
  EXPECT_EQ(pooled_layout(reg).count(RepKind::trivial), 2u);
}

TEST(Stack, InitIsDeterministicAndScaled) {
  const GroupPtr g = make_cyclic_group(8);
  const std::vector<ReprLayout> layouts = {ReprLayout(g, {{RepKind::standard, 2}}),
                                           ReprLayout(g, {{RepKind::regular, 32}}),
                                           ReprLayout(g, {{RepKind::regular, 16}})};
  const EncoderStack a = init_stack(layouts, 9), b = init_stack(layouts, 9), c = init_stack(layouts, 10);
  EXPECT_EQ(a.layers()[1].raw_weight().value, b.layers()[1].raw_weight().value);
  EXPECT_NE(a.layers()[1].raw_weight().value, c.layers()[1].raw_weight().value);
  // projected hidden-to-output weights have per-entry variance close to 1 / fan_in
  const Mat w = a.layers()[1].project_weight(a.layers()[1].raw_weight().value);
  const double var = w.squaredNorm() / static_cast<double>(w.size());
  EXPECT_NEAR(var * 256.0, 1.0, 0.25);
}

TEST(Stack, FrozenMatchesTapeForward) {
  const GroupPtr g = make_cyclic_group(8);
  const std::vector<ReprLayout> layouts = {ReprLayout(g, {{RepKind::standard, 1}, {RepKind::trivial, 1}}),
                                           ReprLayout(g, {{RepKind::regular, 4}}),
                                           ReprLayout(g, {{RepKind::regular, 2}})};
  for (bool pool : {false, true}) {
    const EncoderStack s = init_stack(layouts, 11, {}, pool);
    std::mt19937_64 rng(12);
    const Mat x = randn(5, 3, rng);
    ad::Tape tape;
    ParamBinder bind(tape, false);
    const Mat via_tape = s.forward(bind, tape.constant(x)).value();
    EXPECT_LT((s.freeze().forward(x) - via_tape).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((s.forward(x) - via_tape).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(s.output_layout().total_dim(), pool ? 2u : 16u);
  }
}

TEST(Stack, WithoutProjectionEquivarianceBreaks) {
  const GroupPtr g = make_cyclic_group(8);
  const ReprLayout in(g, {{RepKind::standard, 1}});
  const ReprLayout out(g, {{RepKind::regular, 2}});
  EquivariantLinear layer(in, out);
  std::mt19937_64 rng(13);
  layer.raw_weight().value = randn(16, 2, rng);
  layer.set_projection_enabled(false);
  const Mat x = randn(1, 2, rng);
  const Mat lhs = layer.forward(act_on_rows(in, 1, x));
  const Mat rhs = act_on_rows(out, 1, layer.forward(x));
  EXPECT_GT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-3);
}
