#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

using namespace nndist;

namespace {

NetworkParams single_layer(const Matrix& w, const Vector& out) {
  NetworkParams p;
  p.layers = {w};
  p.output = out;
  return p;
}

// Nearest point of the l1 ball to y by exhaustive search over a grid of the
// ball's boundary and interior.
Eigen::Vector2d grid_l1_projection(const Eigen::Vector2d& y, double r, double step) {
  Eigen::Vector2d best = Eigen::Vector2d::Zero();
  double best_d = kInf;
  const int n = static_cast<int>(std::ceil(r / step));
  for (int i = -n; i <= n; ++i) {
    for (int j = -n; j <= n; ++j) {
      Eigen::Vector2d c(i * step, j * step);
      if (c.lpNorm<1>() > r) continue;
      const double d = (c - y).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
  }
  return best;
}

}  // namespace

TEST(Norms, ThreeFourFive) {
  const auto n = layer_norms(single_layer(Matrix{{3.0, 4.0}}, Vector::Ones(1)));
  EXPECT_DOUBLE_EQ(n.layers[0].frobenius, 5.0);
  EXPECT_DOUBLE_EQ(n.layers[0].row_l1_max, 7.0);
}

TEST(Norms, Identity) {
  const auto n = layer_norms(single_layer(Matrix::Identity(2, 2), Vector::Ones(2)));
  EXPECT_DOUBLE_EQ(n.layers[0].frobenius, std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(n.layers[0].row_l1_max, 1.0);
}

TEST(Norms, OutputVector) {
  const auto n = layer_norms(single_layer(Matrix::Identity(3, 3), Vector{{1.0, -1.0, 1.0}}));
  EXPECT_DOUBLE_EQ(n.output_l2, std::sqrt(3.0));
  EXPECT_DOUBLE_EQ(n.output_l1, 3.0);
}

TEST(Feasibility, Examples) {
  const ConstraintSet fro{NormKind::frobenius, {1.0, 1.0}};
  EXPECT_TRUE(is_feasible(single_layer(Matrix{{0.6, 0.8}}, Vector::Ones(1)), fro));
  EXPECT_FALSE(is_feasible(single_layer(Matrix{{3.0, 4.0}}, Vector::Ones(1)), fro));
  const ConstraintSet l1{NormKind::one_inf, {1.0, 1.0}};
  EXPECT_FALSE(is_feasible(single_layer(Matrix{{0.5, 0.5}, {1.0, 0.1}}, Vector{{0.5, 0.5}}), l1));
}

TEST(Feasibility, OutputNormFollowsKind) {
  const auto p = single_layer(Matrix{{0.1, 0.1}, {0.1, 0.1}}, Vector{{0.7, 0.7}});
  EXPECT_TRUE(is_feasible(p, {NormKind::frobenius, {1.0, 1.0}}));
  EXPECT_FALSE(is_feasible(p, {NormKind::one_inf, {1.0, 1.0}}));
}

TEST(ConstraintSetValidation, RejectsBadRadii) {
  EXPECT_THROW((ConstraintSet{NormKind::frobenius, {1.0, 0.0}}.validate(2)), ValidationError);
  EXPECT_THROW((ConstraintSet{NormKind::frobenius, {1.0, -1.0}}.validate(2)), ValidationError);
  EXPECT_THROW((ConstraintSet{NormKind::frobenius, {1.0}}.validate(2)), ValidationError);
}

TEST(Projection, FrobeniusRadial) {
  const auto p = project(single_layer(Matrix{{3.0, 4.0}}, Vector::Ones(1)),
                         {NormKind::frobenius, {1.0, 1.0}});
  EXPECT_NEAR(p.layers[0](0, 0), 0.6, 1e-15);
  EXPECT_NEAR(p.layers[0](0, 1), 0.8, 1e-15);
}

TEST(Projection, L1SingleCoordinateClamp) {
  const auto p = project(single_layer(Matrix{{2.0, 0.0}}, Vector::Ones(1)),
                         {NormKind::one_inf, {1.0, 1.0}});
  EXPECT_DOUBLE_EQ(p.layers[0](0, 0), 1.0);
  EXPECT_DOUBLE_EQ(p.layers[0](0, 1), 0.0);
}

TEST(Projection, L1SoftThreshold) {
  const auto p = project(single_layer(Matrix{{0.6, 0.6}}, Vector::Ones(1)),
                         {NormKind::one_inf, {1.0, 1.0}});
  EXPECT_NEAR(p.layers[0](0, 0), 0.5, 1e-15);
  EXPECT_NEAR(p.layers[0](0, 1), 0.5, 1e-15);
  const auto g = grid_l1_projection({0.6, 0.6}, 1.0, 1e-3);
  EXPECT_NEAR(g(0), 0.5, 1e-3);
  EXPECT_NEAR(g(1), 0.5, 1e-3);
}

TEST(Projection, L1RowsMatchGridOracle) {
  Rng rng(21);
  for (int t = 0; t < 30; ++t) {
    const Eigen::Vector2d y(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
    const double r = rng.uniform(0.3, 1.2);
    Matrix w(1, 2);
    w << y(0), y(1);
    const auto p = project(single_layer(w, Vector::Ones(1)), {NormKind::one_inf, {r, 1.0}});
    const auto g = grid_l1_projection(y, r, 2e-3);
    EXPECT_LE((p.layers[0].row(0).transpose() - Vector(g)).norm(), 3e-3) << y.transpose();
  }
}

TEST(Projection, FeasibleIdempotentAndIdentityOnFeasible) {
  Rng rng(13);
  for (auto kind : {NormKind::frobenius, NormKind::one_inf}) {
    const auto spec = make_spec(4, 4, 6, testutil::relu());
    const ConstraintSet cs{kind, {0.8, 1.5, 0.3, 2.0}};
    for (int t = 0; t < 200; ++t) {
      const auto raw = testutil::random_params(spec, rng, rng.uniform(0.01, 3.0));
      const auto p = project(raw, cs);
      EXPECT_TRUE(is_feasible(p, cs, 1e-12));
      const auto pp = project(p, cs);
      for (std::size_t k = 0; k < p.parameter_count(); ++k) EXPECT_EQ(pp.entry(k), p.entry(k));
    }
  }
}

TEST(Projection, NearestAmongRandomFeasiblePoints) {
  Rng rng(17);
  for (auto kind : {NormKind::frobenius, NormKind::one_inf}) {
    const auto spec = make_spec(3, 3, 3, testutil::relu());
    const ConstraintSet cs{kind, {1.0, 0.5, 1.0}};
    const auto raw = testutil::random_params(spec, rng, 2.0);
    const auto p = project(raw, cs);
    const double own = detail::param_distance_sq(p, raw);
    for (int t = 0; t < 100; ++t) {
      const auto q = project(testutil::random_params(spec, rng, rng.uniform(0.1, 2.0)), cs);
      EXPECT_LE(own, detail::param_distance_sq(q, raw) + 1e-12);
    }
  }
}
