#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "nndist/activation.hpp"
#include "nndist/constraints.hpp"
#include "nndist/error.hpp"
#include "nndist/special.hpp"

namespace nndist {

enum class BoundSide { lower, upper };

inline std::string_view to_string(BoundSide s) { return s == BoundSide::lower ? "lower" : "upper"; }

struct Precondition {
  std::string description;
  bool satisfied = true;
};

/// A bound of the form constant_factor * rate_factor, annotated with every
/// precondition of the result it comes from. Preconditions never block the
/// computation.
struct BoundReport {
  std::string name;
  BoundSide side = BoundSide::upper;
  double constant_factor = 0.0;
  std::string rate_description;
  double rate_factor = 1.0;
  double total = 0.0;
  std::vector<Precondition> preconditions;

  bool preconditions_ok() const {
    for (const auto& p : preconditions)
      if (!p.satisfied) return false;
    return true;
  }
};

namespace detail {

inline BoundReport make_report(std::string name, BoundSide side, double constant,
                               std::string rate_desc, double rate) {
  BoundReport r;
  r.name = std::move(name);
  r.side = side;
  r.constant_factor = constant;
  r.rate_description = std::move(rate_desc);
  r.rate_factor = rate;
  r.total = constant * rate;
  return r;
}

inline double product(const std::vector<double>& v) {
  double p = 1.0;
  for (double x : v) p *= x;
  return p;
}

inline double lipschitz_product(const std::vector<ActivationProfile>& acts) {
  double p = 1.0;
  for (const auto& a : acts) p *= a.lipschitz;
  return p;
}

inline void check_common(std::size_t n, std::size_t m, double gamma, const ConstraintSet& cs,
                         const std::vector<ActivationProfile>& acts) {
  if (n < 1 || m < 1) throw ValidationError("sample sizes must be >= 1");
  if (!(gamma > 0.0)) throw ValidationError("gamma must be positive");
  cs.validate(acts.size() + 1);
}

inline void check_width(double h) {
  if (!(h >= 1.0)) throw ValidationError("input dimension h must be >= 1");
}

inline void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0, 1)");
}

inline double max_rate(std::size_t n, std::size_t m) {
  return std::max(1.0 / std::sqrt(static_cast<double>(n)), 1.0 / std::sqrt(static_cast<double>(m)));
}

inline double sum_rate(std::size_t n, std::size_t m) {
  return 1.0 / std::sqrt(static_cast<double>(n)) + 1.0 / std::sqrt(static_cast<double>(m));
}

inline Precondition homogeneity_condition(const std::vector<ActivationProfile>& acts) {
  bool ok = true;
  for (const auto& a : acts) ok = ok && a.positively_homogeneous();
  return {"every activation satisfies sigma(a x) = a sigma(x) for a > 0", ok};
}

inline Precondition zero_origin_condition(const std::vector<ActivationProfile>& acts) {
  bool ok = true;
  for (const auto& a : acts) ok = ok && a.zero_at_origin();
  return {"every activation satisfies sigma(0) = 0", ok};
}

inline Precondition sample_size_condition(std::size_t n, std::size_t m, double h,
                                          double delta) {
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  const double lhs = std::sqrt(6.0 * h) * std::min(nn, mm) *
                     std::sqrt(1.0 / nn + 1.0 / mm);
  const double rhs = 4.0 * std::sqrt(std::log(1.0 / delta));
  return {"sqrt(6h) min(n,m) sqrt(1/n+1/m) >= 4 sqrt(log(1/delta))", lhs >= rhs};
}

}  // namespace detail

/// Omega(2..d-1): the largest middle-layer multipliers that keep every
/// pre-activation of the witness chain inside the window [0, q(i)].
/// `radii` covers all d layers; `acts` covers layers 1..d-1.
inline std::vector<double> omega_recursion(const std::vector<double>& radii,
                                           const std::vector<ActivationProfile>& acts) {
  if (radii.size() != acts.size() + 1)
    throw ValidationError("omega recursion needs one radius per layer");
  std::vector<double> omega;
  if (acts.size() < 2) return omega;
  double carried = acts[0](acts[0].q);  // sigma_1(q(1))
  for (std::size_t i = 1; i < acts.size(); ++i) {
    const double qi = acts[i].q;
    double cap;
    if (std::isinf(qi)) {
      cap = kInf;
    } else {
      if (carried == 0.0)
        throw NumericalError("omega recursion divides by zero at layer " + std::to_string(i + 1));
      cap = qi / carried;
    }
    const double w = std::min(radii[i], cap);
    omega.push_back(w);
    carried = acts[i](w * carried);
  }
  return omega;
}

/// Minimax lower bound over unbounded-support sub-Gaussian pairs.
inline BoundReport lower_bound_unbounded(double gamma, std::size_t n, std::size_t m,
                                         const ConstraintSet& cs,
                                         const std::vector<ActivationProfile>& acts) {
  detail::check_common(n, m, gamma, cs, acts);
  const double m1 = cs.radii.front(), md = cs.radii.back();
  const double q1 = acts.front().q;
  const auto omega = omega_recursion(cs.radii, acts);
  double qs = 1.0;
  for (const auto& a : acts) qs *= a.q_sigma;
  const double tail = 1.0 - normal_cdf(q1 / (2.0 * m1 * gamma));
  const double constant =
      std::sqrt(3.0) / 6.0 * m1 * md * gamma * tail * detail::product(omega) * qs;
  auto r = detail::make_report("lower_unbounded", BoundSide::lower, constant,
                               "max(n^-1/2, m^-1/2)", detail::max_rate(n, m));
  const double lhs = std::sqrt(1.0 / static_cast<double>(n) + 1.0 / static_cast<double>(m));
  const double rhs = std::sqrt(3.0) * q1 / (2.0 * m1 * gamma);
  r.preconditions.push_back({"sqrt(1/n+1/m) < sqrt(3) q(1) / (2 M(1) gamma)", lhs < rhs});
  return r;
}

/// Activations for the ReLU specialization: q(1) = M(1) gamma, q(i) = inf.
inline std::vector<ActivationProfile> relu_window_profiles(std::size_t depth, double m1,
                                                              double gamma) {
  std::vector<ActivationProfile> acts;
  acts.push_back(activation_profile(ActivationKind::relu, m1 * gamma));
  for (std::size_t i = 2; i < depth; ++i) acts.push_back(activation_profile(ActivationKind::relu, kInf));
  return acts;
}

enum class BoundedLowerVariant {
  /// g(+G) - g(-G): only the input sign flips.
  input_sign,
  /// every radius in the second term carries a negative sign.
  all_radii_negated,
};

/// M(d) s_{d-1}(M(d-1) ... M(2) s_1(M(1) x)), with every radius negated when
/// `negate` is set.
inline double radius_chain(const std::vector<double>& radii,
                           const std::vector<ActivationProfile>& acts, double x,
                           bool negate = false) {
  const double sgn = negate ? -1.0 : 1.0;
  double v = x;
  for (std::size_t i = 0; i < acts.size(); ++i) v = acts[i](sgn * radii[i] * v);
  return sgn * radii.back() * v;
}

/// Minimax lower bound over bounded-support pairs.
inline BoundReport lower_bound_bounded(double gamma_b, std::size_t n, std::size_t m,
                                       const ConstraintSet& cs,
                                       const std::vector<ActivationProfile>& acts,
                                       BoundedLowerVariant variant = BoundedLowerVariant::input_sign) {
  detail::check_common(n, m, gamma_b, cs, acts);
  const double plus = radius_chain(cs.radii, acts, gamma_b);
  const double minus = variant == BoundedLowerVariant::input_sign
                           ? radius_chain(cs.radii, acts, -gamma_b)
                           : radius_chain(cs.radii, acts, gamma_b, true);
  return detail::make_report(
      variant == BoundedLowerVariant::input_sign ? "lower_bounded" : "lower_bounded_negated",
      BoundSide::lower, 0.17 * (plus - minus), "max(n^-1/2, m^-1/2)", detail::max_rate(n, m));
}

/// High-probability bound on the estimation error of the plug-in estimator,
/// unbounded-support sub-Gaussian class.
inline BoundReport upper_bound_unbounded(double gamma, std::size_t n, std::size_t m, double h,
                                         const ConstraintSet& cs,
                                         const std::vector<ActivationProfile>& acts, double delta) {
  detail::check_common(n, m, gamma, cs, acts);
  detail::check_width(h);
  detail::check_delta(delta);
  const double d = static_cast<double>(cs.radii.size());
  const double hh = h;
  const double scale = 2.0 * gamma * cs.radius_product() * detail::lipschitz_product(acts);
  const double confidence = std::sqrt(2.0 * hh * std::log(1.0 / delta));
  double inner;
  BoundReport r;
  if (cs.kind == NormKind::frobenius) {
    inner = std::sqrt(6.0 * d * std::log(2.0) + 5.0 * hh / 4.0) + confidence;
    r = detail::make_report("upper_unbounded_frobenius", BoundSide::upper, scale * inner,
                            "n^-1/2 + m^-1/2", detail::sum_rate(n, m));
    r.preconditions.push_back(detail::homogeneity_condition(acts));
  } else {
    inner = std::sqrt(2.0 * d * std::log(2.0) + 2.0 * std::log(hh)) + confidence;
    r = detail::make_report("upper_unbounded_one_inf", BoundSide::upper, scale * inner,
                            "n^-1/2 + m^-1/2", detail::sum_rate(n, m));
    r.preconditions.push_back(detail::zero_origin_condition(acts));
  }
  r.preconditions.push_back(detail::sample_size_condition(n, m, h, delta));
  return r;
}

/// High-probability bound on the estimation error, bounded-support class.
/// The frobenius case uses the product of Frobenius radii.
inline BoundReport upper_bound_bounded(double gamma_b, std::size_t n, std::size_t m, double h,
                                       const ConstraintSet& cs,
                                       const std::vector<ActivationProfile>& acts, double delta) {
  detail::check_common(n, m, gamma_b, cs, acts);
  detail::check_width(h);
  detail::check_delta(delta);
  const double d = static_cast<double>(cs.radii.size());
  const double log_inv = std::log(1.0 / delta);
  const double scale = gamma_b * cs.radius_product() * detail::lipschitz_product(acts);
  BoundReport r;
  if (cs.kind == NormKind::frobenius) {
    const double inner =
        2.0 * std::sqrt(d * std::log(2.0)) + std::sqrt(log_inv) + std::numbers::sqrt2;
    r = detail::make_report("upper_bounded_frobenius", BoundSide::upper,
                            std::numbers::sqrt2 * scale * inner, "n^-1/2 + m^-1/2",
                            detail::sum_rate(n, m));
    r.preconditions.push_back(detail::homogeneity_condition(acts));
  } else {
    const double inner = 4.0 * std::sqrt(d + 1.0 + std::log(h)) +
                         std::sqrt(2.0 * log_inv);
    r = detail::make_report("upper_bounded_one_inf", BoundSide::upper, scale * inner,
                            "n^-1/2 + m^-1/2", detail::sum_rate(n, m));
    r.preconditions.push_back(detail::zero_origin_condition(acts));
  }
  return r;
}

/// Bound on the average Rademacher complexity over sub-Gaussian inputs.
inline BoundReport rademacher_bound(double gamma, std::size_t n, double h,
                                    const ConstraintSet& cs,
                                    const std::vector<ActivationProfile>& acts) {
  detail::check_common(n, n, gamma, cs, acts);
  detail::check_width(h);
  const double d = static_cast<double>(cs.radii.size());
  const double hh = h;
  const double scale = gamma * cs.radius_product() * detail::lipschitz_product(acts);
  const double rate = 1.0 / std::sqrt(static_cast<double>(n));
  BoundReport r;
  if (cs.kind == NormKind::frobenius) {
    r = detail::make_report("rademacher_frobenius", BoundSide::upper,
                            scale * std::sqrt(6.0 * d * std::log(2.0) + 5.0 * hh / 4.0), "n^-1/2",
                            rate);
    r.preconditions.push_back(detail::homogeneity_condition(acts));
  } else {
    r = detail::make_report(
        "rademacher_one_inf", BoundSide::upper,
        std::numbers::sqrt2 * scale * std::sqrt(d * std::log(2.0) + std::log(hh)), "n^-1/2", rate);
    r.preconditions.push_back(detail::zero_origin_condition(acts));
  }
  return r;
}

/// Scale factors multiplying gamma * prod M * prod L / sqrt(n) in the
/// Rademacher bounds: ours, the worst-case-input route, and the one-hidden-layer
/// Gaussian-input route. Big-O constants of the latter two are unknown, so only
/// the factors are comparable.
struct ComparisonFactors {
  double this_work_frobenius;
  double prior_worstcase;
  double prior_onehidden;
};

inline ComparisonFactors comparison_factors(std::size_t d, double h, std::size_t n1) {
  const double dd = static_cast<double>(d), hh = h;
  return {std::sqrt(6.0 * dd * std::log(2.0) + 5.0 * hh / 4.0), std::sqrt(dd * hh),
          std::sqrt(static_cast<double>(n1) * hh)};
}

/// 2 R_n + 2 R_m + concentration term, for supplied Rademacher complexities.
inline BoundReport combined_rademacher_bound(double rademacher_n, double rademacher_m, double gamma,
                                           double h, std::size_t n, std::size_t m,
                                           const ConstraintSet& cs,
                                           const std::vector<ActivationProfile>& acts,
                                           double delta) {
  detail::check_common(n, m, gamma, cs, acts);
  detail::check_width(h);
  detail::check_delta(delta);
  if (rademacher_n < 0.0 || rademacher_m < 0.0)
    throw ValidationError("Rademacher complexities must be non-negative");
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  const double concentration =
      2.0 * gamma * cs.radius_product() * detail::lipschitz_product(acts) *
      std::sqrt(2.0 * h * (1.0 / nn + 1.0 / mm) * std::log(1.0 / delta));
  auto r = detail::make_report("combined_rademacher", BoundSide::upper,
                               2.0 * rademacher_n + 2.0 * rademacher_m + concentration,
                               "data-dependent (rate folded into the constant)", 1.0);
  r.preconditions.push_back(detail::sample_size_condition(n, m, h, delta));
  return r;
}

/// Concentration term of the combined bound on its own.
inline double combined_concentration_term(double gamma, double h, std::size_t n,
                                          std::size_t m, const ConstraintSet& cs,
                                          const std::vector<ActivationProfile>& acts,
                                          double delta) {
  return combined_rademacher_bound(0.0, 0.0, gamma, h, n, m, cs, acts, delta).total;
}

}  // namespace nndist
