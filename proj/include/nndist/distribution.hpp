#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <variant>

#include "nndist/error.hpp"
#include "nndist/network.hpp"
#include "nndist/rng.hpp"

namespace nndist {

enum class SupportKind { unbounded, bounded };

/// Isotropic Gaussian G(mean, tau^2 I).
struct Gaussian {
  Vector mean;
  double tau = 1.0;
};

/// Discrete distribution; one support point per row of `points`.
struct FiniteSupport {
  Matrix points;
  Vector probs;
};

/// A distribution together with its class metadata: unbounded-support
/// sub-Gaussian (mean norm and tau bounded by gamma) or bounded support
/// (every point within the ball of radius gamma).
struct DistributionSpec {
  std::variant<Gaussian, FiniteSupport> shape;
  SupportKind support = SupportKind::unbounded;
  double tau = 1.0;
  double gamma = 1.0;

  static DistributionSpec gaussian(Vector mean, double tau, double gamma) {
    DistributionSpec d;
    d.shape = Gaussian{std::move(mean), tau};
    d.support = SupportKind::unbounded;
    d.tau = tau;
    d.gamma = gamma;
    d.validate();
    return d;
  }

  static DistributionSpec finite(Matrix points, Vector probs, double gamma) {
    DistributionSpec d;
    d.shape = FiniteSupport{std::move(points), std::move(probs)};
    d.support = SupportKind::bounded;
    d.tau = gamma;
    d.gamma = gamma;
    d.validate();
    return d;
  }

  bool is_gaussian() const { return std::holds_alternative<Gaussian>(shape); }
  const Gaussian& as_gaussian() const { return std::get<Gaussian>(shape); }
  const FiniteSupport& as_finite() const { return std::get<FiniteSupport>(shape); }

  std::size_t dim() const {
    return is_gaussian() ? static_cast<std::size_t>(as_gaussian().mean.size())
                         : static_cast<std::size_t>(as_finite().points.cols());
  }

  void validate() const {
    if (!(gamma > 0.0)) throw ValidationError("distribution gamma must be positive");
    // relative slack for quantities that are equal to gamma by construction
    const double slack = gamma * 1e-12;
    if (is_gaussian()) {
      const auto& g = as_gaussian();
      if (g.mean.size() < 1) throw ValidationError("gaussian mean must be non-empty");
      if (!(g.tau > 0.0)) throw ValidationError("gaussian tau must be positive");
      if (g.mean.norm() > gamma + slack)
        throw ValidationError("gaussian mean norm exceeds gamma");
      if (g.tau > gamma + slack) throw ValidationError("gaussian tau exceeds gamma");
    } else {
      const auto& f = as_finite();
      if (f.points.rows() < 1) throw ValidationError("empty support");
      if (f.probs.size() != f.points.rows())
        throw ValidationError("probability count does not match support size");
      if ((f.probs.array() < 0.0).any()) throw ValidationError("negative probability");
      if (std::abs(f.probs.sum() - 1.0) > 1e-12)
        throw ValidationError("probabilities must sum to 1");
      for (Eigen::Index i = 0; i < f.points.rows(); ++i)
        if (f.points.row(i).norm() > gamma + slack)
          throw ValidationError("support point outside the ball of radius gamma");
    }
  }
};

/// n draws, one per row.
struct SampleSet {
  Matrix rows;
  std::uint64_t seed = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(rows.cols()); }
};

inline SampleSet sample(const DistributionSpec& dist, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("sample size must be >= 1");
  Rng rng(seed);
  const auto h = static_cast<Eigen::Index>(dist.dim());
  SampleSet s{Matrix(static_cast<Eigen::Index>(n), h), seed};
  if (dist.is_gaussian()) {
    const auto& g = dist.as_gaussian();
    for (Eigen::Index i = 0; i < s.rows.rows(); ++i)
      for (Eigen::Index j = 0; j < h; ++j) s.rows(i, j) = g.mean(j) + g.tau * rng.normal();
  } else {
    const auto& f = dist.as_finite();
    if (f.points.rows() == 0) throw ValidationError("empty support");
    std::vector<double> cumulative(static_cast<std::size_t>(f.probs.size()));
    double acc = 0.0;
    for (Eigen::Index k = 0; k < f.probs.size(); ++k) {
      acc += f.probs(k);
      cumulative[static_cast<std::size_t>(k)] = acc;
    }
    for (Eigen::Index i = 0; i < s.rows.rows(); ++i) {
      const double u = rng.uniform() * acc;
      auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
      auto k = static_cast<Eigen::Index>(std::min<std::ptrdiff_t>(
          it - cumulative.begin(), static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
      s.rows.row(i) = f.points.row(k);
    }
  }
  return s;
}

/// KL(a || b) for the closed-form cases: two isotropic Gaussians sharing tau,
/// or two finite distributions with support(a) inside support(b).
inline double kl_divergence(const DistributionSpec& a, const DistributionSpec& b) {
  if (a.dim() != b.dim()) throw ValidationError("KL between distributions of different dimension");
  if (a.is_gaussian() != b.is_gaussian())
    throw ValidationError("KL between a gaussian and a finite distribution is infinite");
  if (a.is_gaussian()) {
    const auto& ga = a.as_gaussian();
    const auto& gb = b.as_gaussian();
    if (std::abs(ga.tau - gb.tau) > 1e-12 * std::max(ga.tau, gb.tau))
      throw ValidationError("KL is implemented only for gaussians sharing tau");
    return (ga.mean - gb.mean).squaredNorm() / (2.0 * ga.tau * ga.tau);
  }
  const auto& fa = a.as_finite();
  const auto& fb = b.as_finite();
  double kl = 0.0;
  for (Eigen::Index i = 0; i < fa.points.rows(); ++i) {
    const double p = fa.probs(i);
    if (p == 0.0) continue;
    double q = 0.0;
    for (Eigen::Index j = 0; j < fb.points.rows(); ++j)
      if ((fa.points.row(i) - fb.points.row(j)).norm() <= 1e-12) q += fb.probs(j);
    if (q == 0.0) throw ValidationError("KL undefined: a is not absolutely continuous w.r.t. b");
    kl += p * std::log(p / q);
  }
  return kl;
}

enum class LeCamKind { gaussian, binary };

/// Two hypothesis pairs (mu1, nu1) and (mu2, nu2) with mu2 == nu2.
///
/// Gaussian case: `shifted` and `base` are the two means, with
///   |shifted|^2 = G^2 (1/n + 1/m) / 3,  |base|^2 = G^2 / (3m),
///   shifted . base = |base|^2,          tau^2 = G^2 (2 + n/m) / 3,
/// where (n, m) = (n_eff, m_eff) = (min, max) of the requested sizes. When the
/// requested n exceeds m the roles are mirrored (nu1 carries the shifted mean)
/// so every distribution keeps tau <= G.
///
/// Binary case: supports {x1, -x1} with |x1| = G and mu1 tilted by eps.
struct LeCamQuadruple {
  LeCamKind kind = LeCamKind::gaussian;
  DistributionSpec mu1, nu1, mu2, nu2;
  std::size_t n = 1, m = 1;
  std::size_t n_eff = 1, m_eff = 1;
  bool mirrored = false;
  Vector shifted, base;
  double tau2 = 0.0;
  Vector x1;
  double eps = 0.0;
};

inline LeCamQuadruple lecam_gaussian_quadruple(double gamma, std::size_t n, std::size_t m,
                                               std::size_t h) {
  if (h < 2) throw ValidationError("gaussian Le Cam construction needs h >= 2");
  if (n < 1 || m < 1) throw ValidationError("sample sizes must be >= 1");
  if (!(gamma > 0.0)) throw ValidationError("gamma must be positive");
  LeCamQuadruple q;
  q.kind = LeCamKind::gaussian;
  q.n = n;
  q.m = m;
  q.mirrored = n > m;
  q.n_eff = std::min(n, m);
  q.m_eff = std::max(n, m);
  const auto ne = static_cast<double>(q.n_eff);
  const auto me = static_cast<double>(q.m_eff);
  const auto hh = static_cast<Eigen::Index>(h);
  q.base = Vector::Zero(hh);
  q.base(0) = gamma / std::sqrt(3.0 * me);
  q.shifted = q.base;
  q.shifted(1) = gamma / std::sqrt(3.0 * ne);
  q.tau2 = gamma * gamma * (2.0 + ne / me) / 3.0;
  const double tau = std::sqrt(q.tau2);
  auto g1 = DistributionSpec::gaussian(q.shifted, tau, gamma);
  auto g2 = DistributionSpec::gaussian(q.base, tau, gamma);
  q.mu1 = q.mirrored ? g2 : g1;
  q.nu1 = q.mirrored ? g1 : g2;
  q.mu2 = DistributionSpec::gaussian(Vector::Zero(hh), tau, gamma);
  q.nu2 = q.mu2;
  return q;
}

inline LeCamQuadruple lecam_binary_quadruple(double gamma, std::size_t n, std::size_t h) {
  if (n < 1) throw ValidationError("sample size must be >= 1");
  if (h < 1) throw ValidationError("dimension must be >= 1");
  if (!(gamma > 0.0)) throw ValidationError("gamma must be positive");
  LeCamQuadruple q;
  q.kind = LeCamKind::binary;
  q.n = q.n_eff = n;
  q.m = q.m_eff = n;
  q.eps = std::sqrt(2.0) / (4.0 * std::sqrt(static_cast<double>(n)));
  const auto hh = static_cast<Eigen::Index>(h);
  q.x1 = Vector::Zero(hh);
  q.x1(0) = gamma;
  Matrix pts(2, hh);
  pts.row(0) = q.x1.transpose();
  pts.row(1) = -q.x1.transpose();
  Vector tilted(2), fair(2);
  tilted << 0.5 - q.eps, 0.5 + q.eps;
  fair << 0.5, 0.5;
  q.mu1 = DistributionSpec::finite(pts, tilted, gamma);
  q.nu1 = DistributionSpec::finite(pts, fair, gamma);
  q.mu2 = q.nu1;
  q.nu2 = q.nu1;
  return q;
}

/// n KL(mu2 || mu1) + m KL(nu2 || nu1): the KL between the two product
/// measures the sample sizes induce.
inline double lecam_total_kl(const LeCamQuadruple& q, std::size_t n, std::size_t m) {
  return static_cast<double>(n) * kl_divergence(q.mu2, q.mu1) +
         static_cast<double>(m) * kl_divergence(q.nu2, q.nu1);
}

inline double lecam_total_kl(const LeCamQuadruple& q) { return lecam_total_kl(q, q.n, q.m); }

}  // namespace nndist
