#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

using namespace nndist;

namespace {

// chain evaluated without ScalarChain: outer * s_{d-1}(m_{d-1} ... m_2 s_1(x))
double scalar_chain(double x, const std::vector<double>& mult, double outer,
                    const std::vector<ActivationProfile>& acts) {
  double v = acts[0](x);
  for (std::size_t i = 1; i < acts.size(); ++i) v = acts[i](mult[i - 1] * v);
  return outer * v;
}

double closed_form_relu_gap(double a) { return a * normal_cdf(a) + normal_pdf(a) - normal_pdf(0.0); }

double monte_carlo_gap(const ScalarChain& c, std::size_t draws, std::uint64_t seed) {
  Rng rng(seed);
  double acc = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double x = c.s * rng.normal();
    acc += c(x + c.offset + c.a) - c(x + c.offset);
  }
  return acc / static_cast<double>(draws);
}

std::vector<ActivationProfile> mixed_acts() {
  return {activation_profile(ActivationKind::sigmoid, 1.0), activation_profile(ActivationKind::tanh, 0.5),
          activation_profile(ActivationKind::softplus, 2.0)};
}

}  // namespace

TEST(WitnessFrobenius, NormalizedFirstRow) {
  const auto spec = make_spec(2, 2, 3, testutil::relu());
  const Vector u1{{0.0, 1.0 / std::sqrt(3.0)}}, u2 = Vector::Zero(2);
  const auto w = build_witness_frobenius(spec, u1, u2, {NormKind::frobenius, {1.0, 1.0}});
  EXPECT_NEAR(w.layers[0](0, 0), 0.0, 1e-15);
  EXPECT_NEAR(w.layers[0](0, 1), 1.0, 1e-15);
  EXPECT_EQ(w.layers[0].bottomRows(2).norm(), 0.0);
  EXPECT_EQ(w.output, (Vector{{1.0, 0.0, 0.0}}));
}

TEST(WitnessFrobenius, StructuralIdentityAndFeasibility) {
  Rng rng(2);
  NetworkSpec spec = make_spec(3, 4, 3, testutil::relu());
  spec.activations = mixed_acts();
  const ConstraintSet cs{NormKind::frobenius, {1.5, 10.0, 0.4, 2.0}};
  const Vector u1 = testutil::random_vector(3, rng), u2 = testutil::random_vector(3, rng);
  const auto w = build_witness_frobenius(spec, u1, u2, cs);
  EXPECT_TRUE(is_feasible(w, cs, 1e-12));
  const auto omega = omega_recursion(cs.radii, spec.activations);
  const Vector w1 = w.layers[0].row(0).transpose();
  EXPECT_NEAR(w1.norm(), 1.5, 1e-14);
  for (int t = 0; t < 100; ++t) {
    const Vector x = testutil::random_vector(3, rng, 2.0);
    EXPECT_NEAR(forward(spec, w, x), scalar_chain(w1.dot(x), omega, 2.0, spec.activations), 1e-12);
  }
}

TEST(WitnessOneInf, StructuralIdentityAndFeasibility) {
  Rng rng(3);
  NetworkSpec spec = make_spec(2, 4, 3, testutil::relu());
  spec.activations = mixed_acts();
  const ConstraintSet cs{NormKind::one_inf, {1.5, 0.8, 0.4, 2.0}};
  const auto q = lecam_gaussian_quadruple(1.0, 3, 5, 2);
  const auto w = build_witness_one_inf(spec, q.shifted, q.base, cs);
  EXPECT_TRUE(is_feasible(w, cs, 1e-12));
  EXPECT_NEAR(row_l1_max(w.layers[1]), 0.8, 1e-15);
  const Vector w1 = w.layers[0].row(0).transpose();
  for (int t = 0; t < 100; ++t) {
    const Vector x = testutil::random_vector(2, rng, 2.0);
    EXPECT_NEAR(forward(spec, w, x), scalar_chain(w1.dot(x), {0.8, 0.4}, 2.0, spec.activations), 1e-12);
  }
}

TEST(WitnessOneInf, FeasibleForGenericDirection) {
  Rng rng(4);
  const auto spec = make_spec(4, 3, 2, testutil::relu());
  const ConstraintSet cs{NormKind::one_inf, {1.0, 1.0, 1.0}};
  for (int t = 0; t < 20; ++t) {
    const auto w = build_witness_one_inf(spec, testutil::random_vector(4, rng), testutil::random_vector(4, rng), cs);
    EXPECT_TRUE(is_feasible(w, cs, 1e-12));
  }
}

TEST(Witness, EqualMeansRejected) {
  const auto spec = make_spec(2, 2, 1, testutil::relu());
  const Vector u = Vector::Ones(2);
  EXPECT_THROW(build_witness_frobenius(spec, u, u, {NormKind::frobenius, {1, 1}}), ValidationError);
  EXPECT_THROW(build_witness_one_inf(spec, u, u, {NormKind::one_inf, {1, 1}}), ValidationError);
}

TEST(WitnessGap, ZeroShift) {
  ScalarChain c;
  c.activations = {testutil::relu()};
  EXPECT_NEAR(witness_gap_exact(c), 0.0, 1e-15);
}

TEST(WitnessGap, ReluClosedForm) {
  for (double a : {0.05, 0.3, 1.0, 2.5}) {
    ScalarChain c;
    c.a = a;
    c.activations = {testutil::relu()};
    EXPECT_NEAR(witness_gap_exact(c), closed_form_relu_gap(a), 1e-8);
  }
  ScalarChain c;
  c.a = 0.7;
  c.activations = {testutil::relu()};
  EXPECT_NEAR(monte_carlo_gap(c, 1000000, 5), closed_form_relu_gap(0.7), 5e-3);
}

TEST(WitnessGap, LeCamUnitExample) {
  const auto q = lecam_gaussian_quadruple(1.0, 1, 1, 2);
  const auto spec = make_spec(2, 2, 2, testutil::relu());
  const auto c = lecam_witness_chain(q, spec, {NormKind::frobenius, {1.0, 1.0}});
  EXPECT_NEAR(c.a, 1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(c.s, 1.0, 1e-15);
  EXPECT_NEAR(c.offset, 0.0, 1e-15);
  const double gap = witness_gap_exact(c);
  EXPECT_NEAR(gap, 0.3533783389756748, 1e-8);
  EXPECT_NEAR(monte_carlo_gap(c, 10000000, 6), gap, 1.5e-3);
}

TEST(WitnessGap, HermiteAgreesForSmoothChains) {
  ScalarChain c;
  c.a = 0.4;
  c.s = 0.8;
  c.multipliers = {1.2, 0.9};
  c.outer = 1.5;
  c.activations = mixed_acts();
  QuadratureConfig gh;
  gh.rule = QuadratureRule::gauss_hermite;
  gh.nodes = 64;
  EXPECT_NEAR(witness_gap_exact(c, gh), witness_gap_exact(c), 1e-8);
}

TEST(WitnessGap, Validation) {
  ScalarChain c;
  c.activations = {testutil::relu()};
  c.s = 0.0;
  EXPECT_THROW(witness_gap_exact(c), ValidationError);
  c.s = 1.0;
  QuadratureConfig q;
  q.nodes = 8;
  EXPECT_THROW(witness_gap_exact(c, q), ValidationError);
}

TEST(WitnessGap, NonConvergenceReported) {
  ScalarChain c;
  c.a = 1.0;
  c.activations = {testutil::relu()};
  QuadratureConfig q;
  q.tolerance = 1e-300;
  q.max_depth = 4;
  EXPECT_THROW(witness_gap_exact(c, q), NumericalError);
}

TEST(DeltaLowerBound, Examples) {
  const std::vector<ActivationProfile> relu{testutil::relu()};
  EXPECT_NEAR(delta_lower_bound(1.0, 1, {1.0, 1.0}, relu).value, 1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(delta_lower_bound(1.0, 4, {1.0, 1.0}, relu).value, 0.5 / std::sqrt(3.0), 1e-15);
  const std::vector<ActivationProfile> sig{activation_profile(ActivationKind::sigmoid, 1.0)};
  const auto d = delta_lower_bound(1.0, 1, {1.0, 1.0}, sig);
  EXPECT_NEAR(d.value, 0.07763670101210363, 1e-14);
  EXPECT_FALSE(d.precondition_ok);
}

TEST(DeltaLowerBound, FloorsChainDifferenceOnWindow) {
  // sigmoid/tanh chain, depth 3, precondition satisfied
  const std::vector<ActivationProfile> acts{activation_profile(ActivationKind::sigmoid, 2.0),
                                            activation_profile(ActivationKind::tanh, 1.0)};
  const ConstraintSet cs{NormKind::frobenius, {1.0, 3.0, 1.5}};
  const std::size_t n = 50, m = 80;
  const auto q = lecam_gaussian_quadruple(1.0, n, m, 2);
  NetworkSpec spec = make_spec(2, 3, 2, testutil::relu());
  spec.activations = acts;
  const auto c = lecam_witness_chain(q, spec, cs);
  const auto d = delta_lower_bound(1.0, n, cs.radii, acts, m);
  ASSERT_TRUE(d.precondition_ok);
  for (double x = 0.0; x <= acts[0].q / 2.0; x += 0.01)
    EXPECT_GE(c(x + c.a) - c(x), d.value - 1e-15) << x;
}

TEST(Ordering, LowerBoundBelowWitnessGap) {
  for (std::size_t n : {4u, 16u, 64u, 256u, 1024u}) {
    for (double m1 : {0.5, 1.0, 2.0}) {
      const double gamma = 1.3;
      const ConstraintSet cs{NormKind::frobenius, {m1, 1.7}};
      const auto acts = relu_window_profiles(2, m1, gamma);
      NetworkSpec spec = make_spec(2, 2, 2, testutil::relu());
      spec.activations = acts;
      const auto q = lecam_gaussian_quadruple(gamma, n, n, 2);
      const double gap = witness_gap_exact(lecam_witness_chain(q, spec, cs));
      const auto lb = lower_bound_unbounded(gamma, n, n, cs, acts);
      ASSERT_TRUE(lb.preconditions_ok());
      EXPECT_LE(lb.total, gap);
    }
  }
}
