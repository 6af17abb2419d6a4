#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>

#include "nndist/error.hpp"

namespace nndist {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ActivationKind { relu, leaky_relu, sigmoid, tanh, softplus };

inline std::string_view to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::relu: return "relu";
    case ActivationKind::leaky_relu: return "leaky_relu";
    case ActivationKind::sigmoid: return "sigmoid";
    case ActivationKind::tanh: return "tanh";
    case ActivationKind::softplus: return "softplus";
  }
  return "unknown";
}

inline ActivationKind activation_kind_from_string(std::string_view name) {
  if (name == "relu") return ActivationKind::relu;
  if (name == "leaky_relu") return ActivationKind::leaky_relu;
  if (name == "sigmoid") return ActivationKind::sigmoid;
  if (name == "tanh") return ActivationKind::tanh;
  if (name == "softplus") return ActivationKind::softplus;
  throw ValidationError("unknown activation kind '" + std::string(name) + "'");
}

/// An activation together with the constants the bounds need:
/// Lipschitz constant `lipschitz`, and a window [0, q] on which every secant
/// slope is at least `q_sigma`.
struct ActivationProfile {
  ActivationKind kind = ActivationKind::relu;
  double slope = 0.0;  // negative-side slope, leaky_relu only
  double lipschitz = 1.0;
  double q = kInf;
  double q_sigma = 1.0;

  double operator()(double x) const {
    switch (kind) {
      case ActivationKind::relu: return x > 0.0 ? x : 0.0;
      case ActivationKind::leaky_relu: return x > 0.0 ? x : slope * x;
      case ActivationKind::sigmoid: return 1.0 / (1.0 + std::exp(-x));
      case ActivationKind::tanh: return std::tanh(x);
      case ActivationKind::softplus:
        // log(1 + e^x) without overflow
        return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    }
    return 0.0;
  }

  /// Derivative; the kink of the ReLU family takes the value of the left side.
  double derivative(double x) const {
    switch (kind) {
      case ActivationKind::relu: return x > 0.0 ? 1.0 : 0.0;
      case ActivationKind::leaky_relu: return x > 0.0 ? 1.0 : slope;
      case ActivationKind::sigmoid: {
        const double s = 1.0 / (1.0 + std::exp(-x));
        return s * (1.0 - s);
      }
      case ActivationKind::tanh: {
        const double t = std::tanh(x);
        return 1.0 - t * t;
      }
      case ActivationKind::softplus: return 1.0 / (1.0 + std::exp(-x));
    }
    return 0.0;
  }

  /// sigma(a x) == a sigma(x) for every a > 0.
  bool positively_homogeneous() const {
    return kind == ActivationKind::relu || kind == ActivationKind::leaky_relu;
  }

  bool zero_at_origin() const {
    return kind == ActivationKind::relu || kind == ActivationKind::leaky_relu ||
           kind == ActivationKind::tanh;
  }
};

/// Builds the profile for `kind` with linear-growth window [0, q_choice].
/// Saturating activations (sigmoid, tanh) need a finite window.
inline ActivationProfile activation_profile(ActivationKind kind, double q_choice,
                                            double slope = 0.01) {
  if (!(q_choice > 0.0)) throw ValidationError("activation window q must be positive");
  ActivationProfile p;
  p.kind = kind;
  p.q = q_choice;
  switch (kind) {
    case ActivationKind::relu:
      p.lipschitz = 1.0;
      p.q_sigma = 1.0;
      break;
    case ActivationKind::leaky_relu:
      if (!(slope > 0.0 && slope <= 1.0))
        throw ValidationError("leaky_relu slope must lie in (0, 1]");
      p.slope = slope;
      p.lipschitz = 1.0;
      p.q_sigma = std::min(1.0, slope);
      break;
    case ActivationKind::sigmoid:
      if (std::isinf(q_choice)) throw ValidationError("sigmoid needs a finite window q");
      p.lipschitz = 0.25;
      p.q_sigma = 1.0 / (2.0 + 2.0 * std::exp(q_choice));
      break;
    case ActivationKind::tanh: {
      if (std::isinf(q_choice)) throw ValidationError("tanh needs a finite window q");
      // sech^2 is decreasing on [0, inf), so the smallest slope sits at q
      const double c = std::cosh(q_choice);
      p.lipschitz = 1.0;
      p.q_sigma = 1.0 / (c * c);
      break;
    }
    case ActivationKind::softplus:
      // the derivative is the logistic function, increasing; smallest at 0
      p.lipschitz = 1.0;
      p.q_sigma = 0.5;
      break;
  }
  return p;
}

/// Window used when a config does not name one.
inline double default_window(ActivationKind kind) {
  return (kind == ActivationKind::relu || kind == ActivationKind::leaky_relu) ? kInf : 1.0;
}

}  // namespace nndist
