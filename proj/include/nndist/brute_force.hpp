#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "nndist/constraints.hpp"
#include "nndist/error.hpp"
#include "nndist/estimator.hpp"
#include "nndist/network.hpp"

namespace nndist {

struct BruteForceConfig {
  /// Direction grid spacing in degrees; used only for h = 3.
  double resolution_deg = 2.0;
};

struct BruteForceResult {
  double value = 0.0;
  /// Upper bound on (true sup - value). Zero when the search is exact.
  double grid_error = 0.0;
  bool exact = true;
  /// First-layer weight row attaining `value` (norm equal to the first radius).
  Vector direction;
  NetworkParams witness;
};

/// True when the exact oracle covers this architecture: depth 2, positively
/// homogeneous activation, input dimension at most 3.
inline bool brute_force_supported(const NetworkSpec& spec) {
  return spec.depth == 2 && spec.all_positively_homogeneous() && spec.input_dim <= 3;
}

namespace detail {

/// sum_k c_k sigma(w . z_k) for one first-layer row w.
inline double hidden_functional(const WeightedSample& data, const ActivationProfile& act,
                                const Vector& w) {
  const Eigen::RowVectorXd pre = w.transpose() * data.columns;
  Eigen::RowVectorXd post = pre.unaryExpr([&act](double v) { return act(v); });
  return data.combine(post);
}

inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a < 0.0) a += two_pi;
  return a - std::numbers::pi;
}

/// Is angle t inside the arc that starts at `lo` and has length `len`?
inline bool in_arc(double t, double lo, double len) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double d = std::fmod(t - lo, two_pi);
  if (d < 0.0) d += two_pi;
  return d <= len;
}

/// Exact maximum of |g| over the unit circle of the l2 (frobenius) or l1
/// (one_inf) norm, where g(u) = sum_k c_k sigma(u . z_k) and sigma is
/// positively homogeneous. Between consecutive angles at which some u . z_k
/// changes sign, g(u(theta)) = A cos(theta) + B sin(theta); in the l1 case it
/// is divided by |cos| + |sin|, which is monotone within each quadrant.
inline std::pair<double, double> sweep_circle(const WeightedSample& data,
                                              const ActivationProfile& act, NormKind kind) {
  const double low_slope = act.kind == ActivationKind::leaky_relu ? act.slope : 0.0;
  struct Event {
    double angle;
    Eigen::Index point;  // -1 for a quadrant marker
    bool enter;
  };
  std::vector<Event> events;
  const Eigen::Index count = data.size();
  for (Eigen::Index k = 0; k < count; ++k) {
    const double zx = data.columns(0, k), zy = data.columns(1, k);
    if (zx == 0.0 && zy == 0.0) continue;
    const double phi = std::atan2(zy, zx);
    events.push_back({wrap_angle(phi - std::numbers::pi / 2), k, true});
    events.push_back({wrap_angle(phi + std::numbers::pi / 2), k, false});
  }
  if (kind == NormKind::one_inf)
    for (double q : {-std::numbers::pi, -std::numbers::pi / 2, 0.0, std::numbers::pi / 2})
      events.push_back({q, -1, false});
  if (events.empty()) events.push_back({0.0, -1, false});
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) { return a.angle < b.angle; });

  constexpr double two_pi = 2.0 * std::numbers::pi;
  // status on the arc that wraps from the last event to the first
  const double ref =
      events.size() == 1 ? events[0].angle + std::numbers::pi
                         : 0.5 * (events.back().angle + events.front().angle + two_pi);
  std::vector<char> active(static_cast<std::size_t>(count), 0);
  double A = 0.0, B = 0.0;
  for (Eigen::Index k = 0; k < count; ++k) {
    const double zx = data.columns(0, k), zy = data.columns(1, k);
    const bool on = std::cos(ref) * zx + std::sin(ref) * zy > 0.0;
    active[static_cast<std::size_t>(k)] = on;
    const double factor = data.coeffs(k) * (on ? 1.0 : low_slope);
    A += factor * zx;
    B += factor * zy;
  }

  auto evaluate = [&](double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    const double v = A * c + B * s;
    return kind == NormKind::frobenius ? v : v / (std::abs(c) + std::abs(s));
  };
  double best = -1.0, best_angle = 0.0;
  auto consider = [&](double theta) {
    const double v = std::abs(evaluate(theta));
    if (v > best) {
      best = v;
      best_angle = theta;
    }
  };

  std::size_t i = 0;
  while (i < events.size()) {
    const double angle = events[i].angle;
    for (; i < events.size() && events[i].angle == angle; ++i) {
      const auto& e = events[i];
      if (e.point < 0) continue;
      auto& on = active[static_cast<std::size_t>(e.point)];
      if (static_cast<bool>(on) == e.enter) continue;
      on = e.enter;
      const double delta = data.coeffs(e.point) * (1.0 - low_slope) * (e.enter ? 1.0 : -1.0);
      A += delta * data.columns(0, e.point);
      B += delta * data.columns(1, e.point);
    }
    const double next = i < events.size() ? events[i].angle : events.front().angle + two_pi;
    consider(angle);
    consider(next);
    if (kind == NormKind::frobenius) {
      const double psi = std::atan2(B, A);
      const double len = next - angle;
      if (in_arc(psi, angle, len)) consider(psi);
      if (in_arc(psi + std::numbers::pi, angle, len)) consider(psi + std::numbers::pi);
    }
  }
  return {best, best_angle};
}

/// Roughly uniform directions on the 2-sphere with the given spacing.
inline std::vector<Vector> fibonacci_sphere(double spacing_rad) {
  const auto count = static_cast<std::size_t>(
      std::ceil(4.0 * std::numbers::pi / (spacing_rad * spacing_rad)));
  std::vector<Vector> dirs;
  dirs.reserve(count);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(count);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double t = golden * static_cast<double>(i);
    Vector d(3);
    d << r * std::cos(t), r * std::sin(t), z;
    dirs.push_back(d);
  }
  return dirs;
}

}  // namespace detail

/// sup over the feasible set of |sum_k c_k f(z_k)| for depth-2 networks.
///
/// For a positively homogeneous activation the objective of a depth-2 network
/// is bounded by r1 * r2 * max_u |g(u)| over unit first-layer rows u (in the
/// constraint norm), whatever the hidden width, and a single active unit on
/// the boundary attains it. The search over u is exact for h <= 2 and a
/// direction grid for h = 3.
inline BruteForceResult brute_force_sup(const WeightedSample& data, const NetworkSpec& spec,
                                        const ConstraintSet& cs,
                                        const BruteForceConfig& cfg = {}) {
  spec.validate();
  cs.validate(spec.depth);
  if (!brute_force_supported(spec))
    throw ValidationError(
        "brute-force oracle supports only depth-2 networks with relu/leaky_relu and h <= 3");
  if (data.dim() != spec.input_dim) throw ShapeError("sample dimension does not match network");
  const auto& act = spec.activations[0];
  const double r1 = cs.radii[0], r2 = cs.radii[1];
  const auto h = static_cast<Eigen::Index>(spec.input_dim);

  BruteForceResult res;
  Vector unit(h);
  if (h == 1) {
    Vector plus = Vector::Ones(1), minus = -Vector::Ones(1);
    const double gp = std::abs(detail::hidden_functional(data, act, plus));
    const double gm = std::abs(detail::hidden_functional(data, act, minus));
    unit = gp >= gm ? plus : minus;
  } else if (h == 2) {
    const auto [best, angle] = detail::sweep_circle(data, act, cs.kind);
    (void)best;
    unit << std::cos(angle), std::sin(angle);
    if (cs.kind == NormKind::one_inf) unit /= unit.lpNorm<1>();
  } else {
    const double spacing = cfg.resolution_deg * std::numbers::pi / 180.0;
    if (!(spacing > 0.0)) throw ValidationError("grid resolution must be positive");
    const auto dirs = detail::fibonacci_sphere(spacing);
    Matrix d(static_cast<Eigen::Index>(dirs.size()), 3);
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      Vector u = dirs[i];
      if (cs.kind == NormKind::one_inf) u /= u.lpNorm<1>();
      d.row(static_cast<Eigen::Index>(i)) = u.transpose();
    }
    const Matrix post = (d * data.columns).unaryExpr([&act](double v) { return act(v); });
    Eigen::Index best_row = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < post.rows(); ++i) {
      const double v = std::abs(data.combine(post.row(i)));
      if (v > best) {
        best = v;
        best_row = i;
      }
    }
    unit = d.row(best_row).transpose();
    // |g(u) - g(u')| <= L |u - u'| sum_k |c_k| |z_k|; the l1 normalization
    // stretches distances by at most 2 sqrt(h)
    double mass = 0.0;
    for (Eigen::Index k = 0; k < data.size(); ++k)
      mass += std::abs(data.coeffs(k)) * data.columns.col(k).norm();
    const double stretch = cs.kind == NormKind::one_inf ? 2.0 * std::sqrt(3.0) : 1.0;
    res.grid_error = r1 * r2 * act.lipschitz * mass * spacing * stretch;
    res.exact = false;
  }
  const Vector w = r1 * unit;
  const double g = detail::hidden_functional(data, act, w);
  res.value = r2 * std::abs(g);
  res.direction = w;
  res.witness = NetworkParams::zeros(spec);
  res.witness.layers[0].row(0) = w.transpose();
  res.witness.output(0) = g >= 0.0 ? r2 : -r2;
  return res;
}

/// Supremum of the empirical neural net distance for depth-2 networks.
inline BruteForceResult brute_force_nnd(const SampleSet& x, const SampleSet& y,
                                        const NetworkSpec& spec, const ConstraintSet& cs,
                                        const BruteForceConfig& cfg = {}) {
  return brute_force_sup(WeightedSample::difference(x, y), spec, cs, cfg);
}

}  // namespace nndist
