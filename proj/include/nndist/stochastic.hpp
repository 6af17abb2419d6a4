#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "nndist/brute_force.hpp"
#include "nndist/constraints.hpp"
#include "nndist/distribution.hpp"
#include "nndist/estimator.hpp"
#include "nndist/rng.hpp"

namespace nndist {

/// Kahan-Babuska summation.
class CompensatedSum {
public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct MCResult {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::vector<double> values;
};

inline MCResult summarize(const std::vector<double>& values, std::uint64_t seed, bool keep) {
  if (values.size() < 2) throw ValidationError("at least two trials are required");
  CompensatedSum s;
  for (double v : values) s.add(v);
  const double n = static_cast<double>(values.size());
  const double mean = s.value() / n;
  CompensatedSum sq;
  for (double v : values) sq.add((v - mean) * (v - mean));
  MCResult r;
  r.mean = mean;
  r.std_error = std::sqrt(sq.value() / (n - 1.0)) / std::sqrt(n);
  r.trials = values.size();
  r.seed = seed;
  if (keep) r.values = values;
  return r;
}

/// Maximize |data| over the feasible set: exact for depth-2 homogeneous
/// networks with h <= 3, projected ascent otherwise.
inline double supremum(const WeightedSample& data, const NetworkSpec& spec, const ConstraintSet& cs,
                       const AscentConfig& cfg, std::uint64_t seed) {
  if (brute_force_supported(spec)) return brute_force_sup(data, spec, cs).value;
  AscentConfig c = cfg;
  c.seed = seed;
  return estimate_sup(data, spec, cs, c).value;
}

/// Average Rademacher complexity E sup |(1/n) sum eps_i f(x_i)|. Every trial
/// value is a lower bound on that trial's supremum (exact on the oracle path).
inline MCResult mc_rademacher(const DistributionSpec& dist, const NetworkSpec& spec,
                              const ConstraintSet& cs, std::size_t n, std::size_t trials,
                              const AscentConfig& cfg, std::uint64_t seed,
                              bool keep_values = false) {
  dist.validate();
  spec.validate();
  cs.validate(spec.depth);
  cfg.validate();
  if (trials < 2) throw ValidationError("at least two trials are required");
  if (dist.dim() != spec.input_dim) throw ShapeError("distribution dimension does not match network");
  std::vector<double> values(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    const std::uint64_t ts = derive_seed(seed, t);
    const SampleSet x = sample(dist, n, derive_seed(ts, 0));
    Rng signs_rng(derive_seed(ts, 1));
    Vector signs(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < signs.size(); ++i) signs(i) = signs_rng.sign();
    values[t] = supremum(WeightedSample::rademacher(x, signs), spec, cs, cfg, derive_seed(ts, 2));
  }
  return summarize(values, seed, keep_values);
}

enum class TailMode { brute_force, ascent };

struct TailCheck {
  std::vector<double> epsilon;
  std::vector<double> empirical_freq;
  std::vector<double> bound;
  std::vector<char> valid;
  double lipschitz = 0.0;  // prod M * prod L
  double epsilon_max = 0.0;
  double mean_statistic = 0.0;
  std::size_t trials = 0;
  std::vector<std::string> warnings;
};

/// exp(-eps^2 m n / (8 h G^2 L^2 (m + n))).
inline double concentration_bound(double eps, std::size_t n, std::size_t m, std::size_t h,
                                  double gamma, double lipschitz) {
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  return std::exp(-eps * eps * mm * nn /
                  (8.0 * static_cast<double>(h) * gamma * gamma * lipschitz * lipschitz * (mm + nn)));
}

/// Largest eps for which the tail inequality is stated.
inline double concentration_epsilon_max(std::size_t n, std::size_t m, std::size_t h, double gamma,
                                        double lipschitz) {
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  return std::sqrt(3.0) * static_cast<double>(h) * gamma * lipschitz * std::min(nn, mm) *
         (1.0 / nn + 1.0 / mm);
}

/// Empirical upper tail of F - E F, where F is the empirical distance between
/// fresh draws of n points from mu and m points from nu.
inline TailCheck concentration_tailcheck(const DistributionSpec& mu, const DistributionSpec& nu,
                                         const NetworkSpec& spec, const ConstraintSet& cs,
                                         std::size_t n, std::size_t m, std::size_t trials,
                                         const std::vector<double>& eps_grid, TailMode mode,
                                         std::uint64_t seed, const AscentConfig& cfg = {}) {
  mu.validate();
  nu.validate();
  spec.validate();
  cs.validate(spec.depth);
  if (mu.dim() != spec.input_dim || nu.dim() != spec.input_dim)
    throw ShapeError("distribution dimension does not match network");
  if (trials < 2) throw ValidationError("at least two trials are required");
  for (double e : eps_grid)
    if (!(e >= 0.0)) throw ValidationError("epsilon grid must be non-negative");
  if (mode == TailMode::brute_force && !brute_force_supported(spec))
    throw ValidationError("brute_force mode needs a depth-2 homogeneous network with h <= 3");

  TailCheck tc;
  tc.trials = trials;
  if (trials < 100) tc.warnings.push_back("fewer than 100 trials: tail frequencies are unreliable");
  if (mode == TailMode::ascent)
    tc.warnings.push_back("ascent mode approximates the supremum; results are diagnostic only");

  std::vector<double> stats(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    const std::uint64_t ts = derive_seed(seed, t);
    const auto data = WeightedSample::difference(sample(mu, n, derive_seed(ts, 0)),
                                                 sample(nu, m, derive_seed(ts, 1)));
    if (mode == TailMode::brute_force) {
      stats[t] = brute_force_sup(data, spec, cs).value;
    } else {
      AscentConfig c = cfg;
      c.seed = derive_seed(ts, 2);
      stats[t] = estimate_sup(data, spec, cs, c).value;
    }
  }
  CompensatedSum s;
  for (double v : stats) s.add(v);
  tc.mean_statistic = s.value() / static_cast<double>(trials);

  const double gamma = std::max(mu.gamma, nu.gamma);
  tc.lipschitz = cs.radius_product() * spec.lipschitz_product();
  tc.epsilon_max = concentration_epsilon_max(n, m, spec.input_dim, gamma, tc.lipschitz);
  for (double e : eps_grid) {
    std::size_t hits = 0;
    for (double v : stats)
      if (v - tc.mean_statistic >= e) ++hits;
    tc.epsilon.push_back(e);
    tc.empirical_freq.push_back(static_cast<double>(hits) / static_cast<double>(trials));
    tc.bound.push_back(concentration_bound(e, n, m, spec.input_dim, gamma, tc.lipschitz));
    tc.valid.push_back(e <= tc.epsilon_max);
  }
  return tc;
}

/// Largest eigenvalue of the symmetric positive semidefinite matrix s.
inline double spectral_norm_psd(const Matrix& s, double tol = 1e-10, std::size_t max_iter = 100000) {
  if (s.rows() != s.cols()) throw ShapeError("spectral norm needs a square matrix");
  if (s.size() == 0 || s.isZero(0.0)) return 0.0;
  Rng rng(0x5eed);
  Vector v(s.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
  v.normalize();
  double lambda = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    Vector w = s * v;
    const double next = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    if (std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next))) return next;
    lambda = next;
  }
  throw NumericalError("power iteration did not converge");
}

struct MgfCheck {
  double empirical_mgf = 0.0;
  double bound = 0.0;
  double eta_max = kInf;  // eta must stay below this
};

/// Compares E exp(eta |A x|^2), x ~ N(u, tau^2 I), with the sub-Gaussian
/// quadratic-form bound
///   exp(tau^2 tr(S) eta + (tau^4 tr(S^2) eta^2 + |A u|^2 eta) / (1 - 2 tau^2 |S| eta)),
/// S = A^T A.
inline MgfCheck mgf_check(const Vector& u, double tau, const Matrix& a, double eta,
                          std::size_t trials, std::uint64_t seed) {
  if (a.cols() != u.size()) throw ShapeError("A must have one column per coordinate of u");
  if (!(tau > 0.0)) throw ValidationError("tau must be positive");
  if (trials < 1) throw ValidationError("at least one trial is required");
  const Matrix sigma = a.transpose() * a;
  const double snorm = spectral_norm_psd(sigma);
  MgfCheck r;
  r.eta_max = snorm > 0.0 ? 1.0 / (2.0 * tau * tau * snorm) : kInf;
  if (!(eta >= 0.0) || !(eta < r.eta_max))
    throw ValidationError("eta must lie in [0, 1/(2 tau^2 |A^T A|))");
  const double t2 = tau * tau;
  const double au = (a * u).squaredNorm();
  r.bound = std::exp(t2 * sigma.trace() * eta +
                     (t2 * t2 * (sigma * sigma).trace() * eta * eta + au * eta) /
                         (1.0 - 2.0 * t2 * snorm * eta));
  Rng rng(seed);
  CompensatedSum s;
  Vector x(u.size());
  for (std::size_t t = 0; t < trials; ++t) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = u(i) + tau * rng.normal();
    s.add(std::exp(eta * (a * x).squaredNorm()));
  }
  r.empirical_mgf = s.value() / static_cast<double>(trials);
  return r;
}

struct BoundedDifference {
  double max_ratio = 0.0;
  double ceiling = 0.0;     // prod M * prod L
  double grid_slack = 0.0;  // relative slack from the direction grid (h = 3 only)
  std::size_t perturbations = 0;
};

/// Replaces one sample of X at a time and records
/// |F(X) - F(X')| n / |x_i - x_i'|, with F the exact empirical distance.
inline BoundedDifference bounded_difference_check(const DistributionSpec& dist,
                                                  const NetworkSpec& spec, const ConstraintSet& cs,
                                                  std::size_t n, std::size_t perturbations,
                                                  std::uint64_t seed) {
  dist.validate();
  spec.validate();
  cs.validate(spec.depth);
  if (!brute_force_supported(spec))
    throw ValidationError("bounded-difference check needs the exact oracle architecture");
  if (dist.dim() != spec.input_dim) throw ShapeError("distribution dimension does not match network");
  if (n < 1) throw ValidationError("sample size must be >= 1");
  const SampleSet x = sample(dist, n, derive_seed(seed, 0));
  const SampleSet y = sample(dist, n, derive_seed(seed, 1));
  const auto base = brute_force_nnd(x, y, spec, cs);
  BoundedDifference r;
  r.ceiling = cs.radius_product() * spec.lipschitz_product();
  r.perturbations = perturbations;
  Rng pick(derive_seed(seed, 2));
  for (std::size_t p = 0; p < perturbations; ++p) {
    const auto i = static_cast<Eigen::Index>(pick.next_u64() % n);
    SampleSet xp = x;
    xp.rows.row(i) = sample(dist, 1, derive_seed(seed, 3 + p)).rows.row(0);
    const double dist_change = (xp.rows.row(i) - x.rows.row(i)).norm();
    if (dist_change == 0.0) continue;
    const auto moved = brute_force_nnd(xp, y, spec, cs);
    r.grid_slack = std::max({r.grid_slack, base.grid_error, moved.grid_error});
    const double ratio =
        std::abs(moved.value - base.value) * static_cast<double>(n) / dist_change;
    r.max_ratio = std::max(r.max_ratio, ratio);
  }
  return r;
}

struct RateRow {
  std::size_t n = 0;
  std::size_t reps = 0;
  double mean_error = 0.0;
  double std_error = 0.0;
};

struct RateResult {
  std::vector<RateRow> rows;
  double slope = 0.0;
  double intercept = 0.0;
};

using DistanceEstimator = std::function<double(const SampleSet&, const SampleSet&)>;

/// Least-squares line through (log x, log y).
inline std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("fit needs matching series of length >= 2");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw NumericalError("degenerate fit: log of a non-positive value");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const double k = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw NumericalError("degenerate fit: zero variance in log n");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

/// Estimation error against n for two equal distributions, where the true
/// distance is zero and the error is the estimate itself.
inline RateResult rate_experiment(const DistributionSpec& dist, const NetworkSpec& spec,
                                  const ConstraintSet& cs, const std::vector<std::size_t>& grid,
                                  std::size_t reps, const AscentConfig& cfg, std::uint64_t seed,
                                  const DistanceEstimator& estimator = {}) {
  dist.validate();
  spec.validate();
  cs.validate(spec.depth);
  cfg.validate();
  if (grid.size() < 4) throw ValidationError("rate grid needs at least 4 sample sizes");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 1) throw ValidationError("sample sizes must be >= 1");
    if (i > 0 && grid[i] <= grid[i - 1]) throw ValidationError("rate grid must be strictly increasing");
  }
  if (reps < 5) throw ValidationError("rate experiment needs at least 5 repetitions");
  if (dist.dim() != spec.input_dim) throw ShapeError("distribution dimension does not match network");

  RateResult out;
  std::vector<double> ns, means;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const std::size_t n = grid[g];
    std::vector<double> errors(reps);
    for (std::size_t r = 0; r < reps; ++r) {
      const std::uint64_t rs = derive_seed(derive_seed(seed, n), r);
      const SampleSet x = sample(dist, n, derive_seed(rs, 0));
      const SampleSet y = sample(dist, n, derive_seed(rs, 1));
      if (estimator) {
        errors[r] = estimator(x, y);
      } else {
        AscentConfig c = cfg;
        c.seed = derive_seed(rs, 2);
        errors[r] = estimate_nnd(x, y, spec, cs, c).value;
      }
    }
    const MCResult s = summarize(errors, seed, false);
    out.rows.push_back({n, reps, s.mean, s.std_error});
    ns.push_back(static_cast<double>(n));
    means.push_back(s.mean);
  }
  std::tie(out.slope, out.intercept) = loglog_fit(ns, means);
  return out;
}

}  // namespace nndist
