#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "nndist/error.hpp"

namespace nndist {

enum class QuadratureRule { adaptive_simpson, gauss_hermite };

struct QuadratureConfig {
  QuadratureRule rule = QuadratureRule::adaptive_simpson;
  std::size_t nodes = 64;        // Gauss-Hermite node count, also initial Simpson panels
  double tolerance = 1e-8;       // absolute error target for adaptive Simpson
  double half_width = 10.0;      // integration half-width in standard deviations
  std::size_t max_depth = 60;

  void validate() const {
    if (nodes < 16) throw ValidationError("quadrature node count must be >= 16");
    if (!(tolerance > 0.0)) throw ValidationError("quadrature tolerance must be positive");
    if (!(half_width > 0.0)) throw ValidationError("quadrature half-width must be positive");
  }
};

/// Adaptive Simpson with Richardson correction. The interval is first cut into
/// `panels` pieces so narrow features cannot slip between the initial nodes;
/// the tolerance is shared between panels in proportion to their width.
template <typename F>
double adaptive_simpson(F&& f, double a, double b, double tol, std::size_t panels = 64,
                        std::size_t max_depth = 60) {
  struct Segment {
    double a, b, fa, fm, fb, whole, tol;
    std::size_t depth;
  };
  auto simpson = [](double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  };
  double total = 0.0;
  double compensation = 0.0;
  auto accumulate = [&](double v) {
    const double y = v - compensation;
    const double t = total + y;
    compensation = (t - total) - y;
    total = t;
  };
  const double width = (b - a) / static_cast<double>(panels);
  std::vector<Segment> stack;
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + width * static_cast<double>(p);
    const double hi = p + 1 == panels ? b : lo + width;
    const double mid = 0.5 * (lo + hi);
    const double flo = f(lo), fmid = f(mid), fhi = f(hi);
    stack.push_back({lo, hi, flo, fmid, fhi, simpson(lo, hi, flo, fmid, fhi),
                     tol / static_cast<double>(panels), 0});
    while (!stack.empty()) {
      Segment s = stack.back();
      stack.pop_back();
      const double m = 0.5 * (s.a + s.b);
      const double lm = 0.5 * (s.a + m), rm = 0.5 * (m + s.b);
      const double flm = f(lm), frm = f(rm);
      const double left = simpson(s.a, m, s.fa, flm, s.fm);
      const double right = simpson(m, s.b, s.fm, frm, s.fb);
      const double diff = left + right - s.whole;
      if (std::abs(diff) <= 15.0 * s.tol) {
        accumulate(left + right + diff / 15.0);
        continue;
      }
      if (s.depth >= max_depth)
        throw NumericalError("adaptive Simpson did not converge on [" + std::to_string(s.a) +
                             ", " + std::to_string(s.b) + "]");
      stack.push_back({s.a, m, s.fa, flm, s.fm, left, 0.5 * s.tol, s.depth + 1});
      stack.push_back({m, s.b, s.fm, frm, s.fb, right, 0.5 * s.tol, s.depth + 1});
    }
  }
  return total;
}

/// Nodes and weights for integral of g(t) exp(-t^2) dt (physicists' Hermite),
/// from the eigen-decomposition of the Jacobi matrix.
struct HermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline HermiteRule gauss_hermite_rule(std::size_t count) {
  if (count < 1) throw ValidationError("Gauss-Hermite rule needs at least one node");
  const auto n = static_cast<Eigen::Index>(count);
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 1; k < n; ++k) {
    const double off = std::sqrt(static_cast<double>(k) / 2.0);
    jacobi(k, k - 1) = off;
    jacobi(k - 1, k) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  if (eig.info() != Eigen::Success) throw NumericalError("Jacobi eigen-decomposition failed");
  HermiteRule rule;
  const double mass = std::sqrt(std::numbers::pi);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double v0 = eig.eigenvectors()(0, k);
    rule.nodes.push_back(eig.eigenvalues()(k));
    rule.weights.push_back(mass * v0 * v0);
  }
  return rule;
}

/// E g(X) for X ~ N(mean, sd^2) by Gauss-Hermite.
template <typename F>
double gaussian_expectation_hermite(F&& g, double mean, double sd, const HermiteRule& rule) {
  double acc = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k)
    acc += rule.weights[k] * g(mean + std::numbers::sqrt2 * sd * rule.nodes[k]);
  return acc / std::sqrt(std::numbers::pi);
}

}  // namespace nndist
