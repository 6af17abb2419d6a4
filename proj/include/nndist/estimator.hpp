#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nndist/constraints.hpp"
#include "nndist/distribution.hpp"
#include "nndist/error.hpp"
#include "nndist/network.hpp"
#include "nndist/rng.hpp"

namespace nndist {

/// A signed linear functional  sum_k c_k f(z_k)  over a fixed point set.
/// Points are stored one per column. The first `split` columns and the rest
/// are summed separately so that two identical halves with opposite weights
/// cancel exactly.
struct WeightedSample {
  Matrix columns;
  Vector coeffs;
  Eigen::Index split = 0;

  std::size_t dim() const { return static_cast<std::size_t>(columns.rows()); }
  Eigen::Index size() const { return columns.cols(); }

  /// (1/n) sum f(x_i) - (1/m) sum f(y_j).
  static WeightedSample difference(const SampleSet& x, const SampleSet& y) {
    if (x.size() == 0 || y.size() == 0) throw ValidationError("empty sample set");
    if (x.dim() != y.dim()) throw ShapeError("sample sets have different dimensions");
    const Eigen::Index n = x.rows.rows(), m = y.rows.rows();
    WeightedSample w;
    w.columns.resize(x.rows.cols(), n + m);
    w.columns.leftCols(n) = x.rows.transpose();
    w.columns.rightCols(m) = y.rows.transpose();
    w.coeffs.resize(n + m);
    w.coeffs.head(n).setConstant(1.0 / static_cast<double>(n));
    w.coeffs.tail(m).setConstant(-1.0 / static_cast<double>(m));
    w.split = n;
    return w;
  }

  /// (1/n) sum eps_i f(x_i).
  static WeightedSample rademacher(const SampleSet& x, const Vector& signs) {
    if (x.size() == 0) throw ValidationError("empty sample set");
    if (static_cast<std::size_t>(signs.size()) != x.size())
      throw ShapeError("one sign per sample is required");
    WeightedSample w;
    w.columns = x.rows.transpose();
    w.coeffs = signs / static_cast<double>(x.size());
    w.split = w.columns.cols();
    return w;
  }

  double combine(const Eigen::RowVectorXd& f) const {
    const Eigen::Index tail = size() - split;
    return f.head(split).dot(coeffs.head(split).transpose()) +
           f.tail(tail).dot(coeffs.tail(tail).transpose());
  }

  double value(const NetworkSpec& spec, const NetworkParams& params) const {
    return combine(forward_batch(spec, params, columns));
  }
};

/// (1/n) sum f(x_i) - (1/m) sum f(y_j); signed.
inline double empirical_objective(const NetworkSpec& spec, const NetworkParams& params,
                                  const SampleSet& x, const SampleSet& y) {
  return WeightedSample::difference(x, y).value(spec, params);
}

struct AscentConfig {
  std::size_t restarts = 8;
  std::size_t steps = 200;
  double step_size = 0.0;   // <= 0: 0.1 * min radius
  double decay = 9.0;       // eta_t = eta_0 / (1 + decay * t / steps)
  double init_scale = 0.0;  // <= 0: radius / sqrt(fan_in) per layer
  std::uint64_t seed = 0;
  double tolerance = 1e-12;  // stop a run once a step moves the parameters less than this
  // Step along grad/|grad|. The objective shrinks like n^-1/2 with the sample
  // size, so raw-gradient steps of a fixed eta stall on large samples.
  bool normalized = true;

  void validate() const {
    if (restarts < 1) throw ValidationError("ascent needs at least one restart");
    if (steps < 1) throw ValidationError("ascent needs at least one step");
    if (!std::isfinite(step_size)) throw ValidationError("step size must be finite");
    if (decay < 0.0) throw ValidationError("step decay must be non-negative");
  }
};

struct RunRecord {
  std::size_t restart = 0;
  int sign = 1;
  double value = 0.0;  // best sign * objective along the run
};

struct EstimateResult {
  double value = 0.0;
  NetworkParams witness;
  std::vector<double> restart_values;  // best |objective| per restart
  int sign = 1;                        // sign branch that produced the witness
  std::size_t best_restart = 0;
  std::vector<double> trace;  // best signed objective after each step, winning run
  std::vector<RunRecord> runs;
};

namespace detail {

inline double param_distance_sq(const NetworkParams& a, const NetworkParams& b) {
  double s = (a.output - b.output).squaredNorm();
  for (std::size_t i = 0; i < a.layers.size(); ++i) s += (a.layers[i] - b.layers[i]).squaredNorm();
  return s;
}

inline NetworkParams random_init(const NetworkSpec& spec, const ConstraintSet& cs,
                                 const AscentConfig& cfg, Rng& rng) {
  NetworkParams p = NetworkParams::zeros(spec);
  auto scale_for = [&](std::size_t layer, std::size_t fan_in) {
    if (cfg.init_scale > 0.0) return cfg.init_scale;
    return cs.radii[layer] / std::sqrt(static_cast<double>(fan_in));
  };
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    const double s = scale_for(i, spec.fan_in(i));
    for (Eigen::Index k = 0; k < p.layers[i].size(); ++k) p.layers[i].data()[k] = rng.uniform(-s, s);
  }
  const double s = scale_for(p.layers.size(), spec.widths.back());
  for (Eigen::Index k = 0; k < p.output.size(); ++k) p.output[k] = rng.uniform(-s, s);
  return project(std::move(p), cs);
}

struct RunOutcome {
  double best = 0.0;  // best sign * objective along the run
  NetworkParams argmax;
  std::vector<double> trace;
};

inline RunOutcome ascend(const NetworkSpec& spec, const ConstraintSet& cs,
                         const WeightedSample& data, const AscentConfig& cfg,
                         NetworkParams theta, double sign, std::size_t restart) {
  const double eta0 = cfg.step_size > 0.0
                          ? cfg.step_size
                          : 0.1 * *std::min_element(cs.radii.begin(), cs.radii.end());
  RunOutcome out;
  out.best = -kInf;
  GradientBundle grad;
  Eigen::RowVectorXd f;
  bool converged = false;
  for (std::size_t t = 0;; ++t) {
    weighted_value_and_grad(spec, theta, data.columns, data.coeffs, grad, &f);
    const double value = sign * data.combine(f);
    if (!std::isfinite(value))
      throw NumericalError("non-finite objective at restart " + std::to_string(restart) +
                           ", step " + std::to_string(t) + " (best so far " +
                           std::to_string(out.best) + ")");
    if (value > out.best) {
      out.best = value;
      out.argmax = theta;
    }
    out.trace.push_back(out.best);
    if (t == cfg.steps || converged) break;
    double eta =
        sign * eta0 / (1.0 + cfg.decay * static_cast<double>(t) / static_cast<double>(cfg.steps));
    if (cfg.normalized) {
      double g2 = grad.output.squaredNorm();
      for (const auto& w : grad.layers) g2 += w.squaredNorm();
      if (g2 == 0.0) break;  // stationary: no direction to move in
      eta /= std::sqrt(g2);
    }
    NetworkParams next = theta;
    for (std::size_t i = 0; i < next.layers.size(); ++i) next.layers[i] += eta * grad.layers[i];
    next.output += eta * grad.output;
    next = project(std::move(next), cs);
    converged = param_distance_sq(next, theta) < cfg.tolerance * cfg.tolerance;
    theta = std::move(next);
  }
  return out;
}

}  // namespace detail

/// Maximizes |sum_k c_k f(z_k)| over the feasible set by projected gradient
/// ascent on both signed objectives from every restart. The returned value is
/// attained by a feasible witness, so it never exceeds the true supremum.
/// If `warm_start` is given, restart 0 starts from its projection.
inline EstimateResult estimate_sup(const WeightedSample& data, const NetworkSpec& spec,
                                   const ConstraintSet& cs, const AscentConfig& cfg,
                                   const std::optional<NetworkParams>& warm_start = std::nullopt) {
  spec.validate();
  cs.validate(spec.depth);
  cfg.validate();
  if (data.dim() != spec.input_dim)
    throw ShapeError("samples have dimension " + std::to_string(data.dim()) +
                     ", network expects " + std::to_string(spec.input_dim));
  EstimateResult result;
  result.value = -1.0;
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    Rng rng(derive_seed(cfg.seed, r));
    NetworkParams init = (r == 0 && warm_start) ? project(*warm_start, cs)
                                                : detail::random_init(spec, cs, cfg, rng);
    check_shapes(spec, init);
    double restart_best = 0.0;
    for (const double sign : {1.0, -1.0}) {
      auto run = detail::ascend(spec, cs, data, cfg, init, sign, r);
      restart_best = std::max(restart_best, run.best);
      result.runs.push_back({r, sign > 0 ? 1 : -1, run.best});
      if (run.best > result.value) {
        result.value = run.best;
        result.witness = std::move(run.argmax);
        result.sign = sign > 0 ? 1 : -1;
        result.best_restart = r;
        result.trace = std::move(run.trace);
      }
    }
    result.restart_values.push_back(restart_best);
  }
  // report the objective exactly as evaluated at the witness
  result.value = std::abs(data.value(spec, result.witness));
  return result;
}

/// Plug-in neural net distance between two empirical measures.
inline EstimateResult estimate_nnd(const SampleSet& x, const SampleSet& y, const NetworkSpec& spec,
                                   const ConstraintSet& cs, const AscentConfig& cfg,
                                   const std::optional<NetworkParams>& warm_start = std::nullopt) {
  return estimate_sup(WeightedSample::difference(x, y), spec, cs, cfg, warm_start);
}

}  // namespace nndist
