#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "nndist/error.hpp"
#include "nndist/network.hpp"

namespace nndist {

enum class NormKind { frobenius, one_inf };

inline std::string_view to_string(NormKind k) {
  return k == NormKind::frobenius ? "frobenius" : "one_inf";
}

inline NormKind norm_kind_from_string(std::string_view s) {
  if (s == "frobenius") return NormKind::frobenius;
  if (s == "one_inf") return NormKind::one_inf;
  throw ValidationError("unknown constraint kind '" + std::string(s) + "'");
}

/// Per-layer norm balls. Under `frobenius` W_i lives in a Frobenius ball and
/// w_d in an l2 ball; under `one_inf` every row of W_i lives in an l1 ball and
/// w_d in an l1 ball. radii[i] bounds layer i+1; radii.back() bounds w_d.
struct ConstraintSet {
  NormKind kind = NormKind::frobenius;
  std::vector<double> radii;

  void validate(std::size_t depth) const {
    if (radii.size() != depth)
      throw ValidationError("constraint set has " + std::to_string(radii.size()) +
                            " radii, network depth is " + std::to_string(depth));
    for (double r : radii)
      if (!(r > 0.0) || !std::isfinite(r))
        throw ValidationError("constraint radii must be finite and positive");
  }

  double radius_product() const {
    double p = 1.0;
    for (double r : radii) p *= r;
    return p;
  }
};

struct LayerNorms {
  double frobenius;
  double row_l1_max;
};

struct NetworkNorms {
  std::vector<LayerNorms> layers;
  double output_l2;
  double output_l1;
};

/// Largest l1 norm over the rows of `w`.
inline double row_l1_max(const Matrix& w) {
  if (w.rows() == 0) return 0.0;
  return w.cwiseAbs().rowwise().sum().maxCoeff();
}

inline NetworkNorms layer_norms(const NetworkParams& params) {
  NetworkNorms n;
  for (const auto& w : params.layers) n.layers.push_back({w.norm(), row_l1_max(w)});
  n.output_l2 = params.output.norm();
  n.output_l1 = params.output.lpNorm<1>();
  return n;
}

inline bool is_feasible(const NetworkParams& params, const ConstraintSet& cs, double tol = 1e-9) {
  if (cs.radii.size() != params.layers.size() + 1) return false;
  const NetworkNorms n = layer_norms(params);
  for (std::size_t i = 0; i < n.layers.size(); ++i) {
    const double v = cs.kind == NormKind::frobenius ? n.layers[i].frobenius : n.layers[i].row_l1_max;
    if (v > cs.radii[i] + tol) return false;
  }
  const double out = cs.kind == NormKind::frobenius ? n.output_l2 : n.output_l1;
  return out <= cs.radii.back() + tol;
}

/// Euclidean projection onto {y : ||y||_1 <= radius} by sorting magnitudes and
/// soft-thresholding.
template <typename Derived>
void project_l1_ball(Eigen::MatrixBase<Derived>&& v, double radius) {
  const Eigen::Index n = v.size();
  double l1 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) l1 += std::abs(v(i));
  if (l1 <= radius * (1.0 + 1e-14)) return;
  std::vector<double> mags(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) mags[static_cast<std::size_t>(i)] = std::abs(v(i));
  std::sort(mags.begin(), mags.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < mags.size(); ++j) {
    cumulative += mags[j];
    const double t = (cumulative - radius) / static_cast<double>(j + 1);
    if (mags[j] - t > 0.0) theta = t;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = std::max(std::abs(v(i)) - theta, 0.0);
    v(i) = std::copysign(m, v(i));
  }
  // rounding can leave the sum a few ulps above the radius
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) s += std::abs(v(i));
  if (s > radius) v *= radius / s;
}

template <typename Derived>
void project_l1_ball(Eigen::MatrixBase<Derived>& v, double radius) {
  project_l1_ball(std::move(v), radius);
}

/// Radial projection onto a Euclidean/Frobenius ball.
template <typename Derived>
void project_l2_ball(Eigen::MatrixBase<Derived>& v, double radius) {
  const double n = v.norm();
  if (n > radius * (1.0 + 1e-14)) v *= radius / n;
}

/// Nearest feasible point; exact for both kinds since each factor is a ball
/// (or a product of row balls).
inline NetworkParams project(NetworkParams params, const ConstraintSet& cs) {
  if (cs.radii.size() != params.layers.size() + 1)
    throw ShapeError("constraint radii do not match the number of layers");
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    auto& w = params.layers[i];
    if (cs.kind == NormKind::frobenius) {
      project_l2_ball(w, cs.radii[i]);
    } else {
      for (Eigen::Index r = 0; r < w.rows(); ++r) project_l1_ball(w.row(r), cs.radii[i]);
    }
  }
  if (cs.kind == NormKind::frobenius)
    project_l2_ball(params.output, cs.radii.back());
  else
    project_l1_ball(params.output, cs.radii.back());
  return params;
}

}  // namespace nndist
