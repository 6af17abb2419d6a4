#pragma once

#include <cmath>
#include <vector>

#include "nndist/bounds.hpp"
#include "nndist/constraints.hpp"
#include "nndist/distribution.hpp"
#include "nndist/network.hpp"
#include "nndist/quadrature.hpp"
#include "nndist/special.hpp"

namespace nndist {

/// One-dimensional reduction of a witness network:
///   g(x) = outer * s_{d-1}(mult_{d-1} s_{d-2}(... mult_2 s_1(x))),
/// evaluated at x = w_1^T input. For Gaussian inputs the pre-activation of the
/// first unit is N(offset + a, s^2) under one hypothesis and N(offset, s^2)
/// under the other.
struct ScalarChain {
  double a = 0.0;
  double offset = 0.0;
  double s = 1.0;
  std::vector<double> multipliers;  // layers 2..d-1
  double outer = 1.0;
  std::vector<ActivationProfile> activations;

  double operator()(double x) const {
    double v = activations.front()(x);
    for (std::size_t i = 1; i < activations.size(); ++i)
      v = activations[i](multipliers[i - 1] * v);
    return outer * v;
  }
};

namespace detail {

inline void check_witness_inputs(const NetworkSpec& spec, const Vector& u1, const Vector& u2,
                                 const ConstraintSet& cs, NormKind expected) {
  spec.validate();
  cs.validate(spec.depth);
  if (cs.kind != expected) throw ValidationError("constraint kind does not match witness builder");
  if (u1.size() != static_cast<Eigen::Index>(spec.input_dim) || u2.size() != u1.size())
    throw ShapeError("witness means must have the network input dimension");
  if ((u1 - u2).norm() == 0.0) throw ValidationError("witness needs u1 != u2");
}

inline std::vector<double> radius_multipliers(const ConstraintSet& cs) {
  return {cs.radii.begin() + 1, cs.radii.end() - 1};
}

}  // namespace detail

/// First unit reads M(1)(u1 - u2)/|u1 - u2|, middle layers pass it along
/// through the (1,1) entry Omega(i), output weight M(d) on that unit.
inline NetworkParams build_witness_frobenius(const NetworkSpec& spec, const Vector& u1,
                                             const Vector& u2, const ConstraintSet& cs) {
  detail::check_witness_inputs(spec, u1, u2, cs, NormKind::frobenius);
  const auto omega = omega_recursion(cs.radii, spec.activations);
  NetworkParams p = NetworkParams::zeros(spec);
  const Vector diff = u1 - u2;
  p.layers[0].row(0) = (cs.radii[0] / diff.norm()) * diff.transpose();
  for (std::size_t i = 1; i < p.layers.size(); ++i) p.layers[i](0, 0) = omega[i - 1];
  p.output(0) = cs.radii.back();
  return p;
}

/// Every row of W_1 equals M(1)(u1 - u2)/|u1 - u2|_1 and every row of a middle
/// layer is M(i) e_1^T, so all hidden units carry the same value; output
/// weight M(d) on the first unit.
inline NetworkParams build_witness_one_inf(const NetworkSpec& spec, const Vector& u1,
                                           const Vector& u2, const ConstraintSet& cs) {
  detail::check_witness_inputs(spec, u1, u2, cs, NormKind::one_inf);
  NetworkParams p = NetworkParams::zeros(spec);
  const Vector diff = u1 - u2;
  const Eigen::RowVectorXd row = (cs.radii[0] / diff.lpNorm<1>()) * diff.transpose();
  for (Eigen::Index r = 0; r < p.layers[0].rows(); ++r) p.layers[0].row(r) = row;
  for (std::size_t i = 1; i < p.layers.size(); ++i) p.layers[i].col(0).setConstant(cs.radii[i]);
  p.output(0) = cs.radii.back();
  return p;
}

inline NetworkParams build_witness(const NetworkSpec& spec, const Vector& u1, const Vector& u2,
                                   const ConstraintSet& cs) {
  return cs.kind == NormKind::frobenius ? build_witness_frobenius(spec, u1, u2, cs)
                                        : build_witness_one_inf(spec, u1, u2, cs);
}

/// Witness for the two-point construction: the first unit reads
/// M(1) x1/|x1|, middle layers pass it on through the (1,1) entry M(i), output
/// weight M(d). Its value is the radius chain of x1 . w1 / M(1).
inline NetworkParams build_witness_binary(const NetworkSpec& spec, const Vector& x1,
                                          const ConstraintSet& cs) {
  spec.validate();
  cs.validate(spec.depth);
  if (x1.size() != static_cast<Eigen::Index>(spec.input_dim))
    throw ShapeError("x1 must have the network input dimension");
  const double norm = cs.kind == NormKind::frobenius ? x1.norm() : x1.lpNorm<1>();
  if (norm == 0.0) throw ValidationError("x1 must be non-zero");
  NetworkParams p = NetworkParams::zeros(spec);
  p.layers[0].row(0) = (cs.radii[0] / norm) * x1.transpose();
  for (std::size_t i = 1; i < p.layers.size(); ++i) p.layers[i](0, 0) = cs.radii[i];
  p.output(0) = cs.radii.back();
  return p;
}

/// Scalar chain of a witness built from (u1, u2) for two Gaussians
/// N(u1, tau^2 I) and N(u2, tau^2 I).
inline ScalarChain witness_chain(const NetworkSpec& spec, const Vector& u1, const Vector& u2,
                                 double tau, const ConstraintSet& cs) {
  const NetworkParams p = build_witness(spec, u1, u2, cs);
  const Vector w1 = p.layers[0].row(0).transpose();
  ScalarChain c;
  c.offset = w1.dot(u2);
  c.a = w1.dot(u1) - c.offset;
  c.s = w1.norm() * tau;
  c.multipliers = cs.kind == NormKind::frobenius ? omega_recursion(cs.radii, spec.activations)
                                                 : detail::radius_multipliers(cs);
  c.outer = cs.radii.back();
  c.activations = spec.activations;
  return c;
}

/// Chain for the Gaussian Le Cam pair (mu1, nu1); a = M(1) G / sqrt(3 n_eff).
inline ScalarChain lecam_witness_chain(const LeCamQuadruple& q, const NetworkSpec& spec,
                                       const ConstraintSet& cs) {
  if (q.kind != LeCamKind::gaussian) throw ValidationError("witness chain needs the gaussian quadruple");
  return witness_chain(spec, q.shifted, q.base, std::sqrt(q.tau2), cs);
}

/// integral of [g(x + offset + a) - g(x + offset)] phi(x; 0, s^2) dx.
inline double witness_gap_exact(const ScalarChain& chain, const QuadratureConfig& qcfg = {}) {
  qcfg.validate();
  if (!(chain.s > 0.0)) throw ValidationError("witness chain scale s must be positive");
  if (chain.activations.empty() || chain.multipliers.size() + 1 != chain.activations.size())
    throw ValidationError("witness chain needs one multiplier per middle layer");
  auto delta = [&](double x) { return chain(x + chain.offset + chain.a) - chain(x + chain.offset); };
  if (qcfg.rule == QuadratureRule::gauss_hermite)
    return gaussian_expectation_hermite(delta, 0.0, chain.s, gauss_hermite_rule(qcfg.nodes));
  const double lo = -qcfg.half_width * chain.s + std::min(0.0, -chain.a);
  const double hi = qcfg.half_width * chain.s + std::max(0.0, chain.a);
  auto integrand = [&](double x) { return delta(x) * normal_pdf(x / chain.s) / chain.s; };
  return adaptive_simpson(integrand, lo, hi, qcfg.tolerance, qcfg.nodes, qcfg.max_depth);
}

struct DeltaLowerBound {
  double value = 0.0;
  bool precondition_ok = true;
};

/// Pointwise floor of the chain difference on [0, q(1)/2]:
///   M(1) M(d) G / sqrt(3n) * prod Omega * prod Q_sigma.
/// The precondition is the one of the unbounded lower bound; a violation is
/// reported but the value is still returned.
inline DeltaLowerBound delta_lower_bound(double gamma, std::size_t n, const std::vector<double>& radii,
                                         const std::vector<ActivationProfile>& acts,
                                         std::size_t m = 0) {
  if (m == 0) m = n;
  if (n < 1) throw ValidationError("sample size must be >= 1");
  if (!(gamma > 0.0)) throw ValidationError("gamma must be positive");
  ConstraintSet cs{NormKind::frobenius, radii};
  const auto report = lower_bound_unbounded(gamma, n, m, cs, acts);
  double qs = 1.0;
  for (const auto& a : acts) qs *= a.q_sigma;
  double omega = 1.0;
  for (double w : omega_recursion(radii, acts)) omega *= w;
  return {radii.front() * radii.back() * gamma / std::sqrt(3.0 * static_cast<double>(n)) * omega * qs,
          report.preconditions_ok()};
}

}  // namespace nndist
