#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nndist/activation.hpp"
#include "nndist/error.hpp"

namespace nndist {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Architecture of a bias-free scalar-output network
///   f(x) = w_d^T s_{d-1}(W_{d-1} s_{d-2}(... s_1(W_1 x))).
/// `widths` holds the d-1 hidden widths n_1..n_{d-1}; the output vector w_d
/// has length n_{d-1}.
struct NetworkSpec {
  std::size_t input_dim = 1;
  std::size_t depth = 2;
  std::vector<std::size_t> widths;
  std::vector<ActivationProfile> activations;

  std::size_t hidden_layers() const { return depth - 1; }

  std::size_t fan_in(std::size_t layer) const {
    return layer == 0 ? input_dim : widths[layer - 1];
  }

  void validate() const {
    if (input_dim < 1) throw ValidationError("input dimension h must be >= 1");
    if (depth < 2) throw ValidationError("depth d must be >= 2");
    if (widths.size() != depth - 1)
      throw ValidationError("expected " + std::to_string(depth - 1) + " hidden widths, got " +
                            std::to_string(widths.size()));
    if (activations.size() != depth - 1)
      throw ValidationError("expected " + std::to_string(depth - 1) + " activations, got " +
                            std::to_string(activations.size()));
    for (auto w : widths)
      if (w < 1) throw ValidationError("hidden widths must be positive");
  }

  bool all_positively_homogeneous() const {
    for (const auto& a : activations)
      if (!a.positively_homogeneous()) return false;
    return true;
  }

  bool all_zero_at_origin() const {
    for (const auto& a : activations)
      if (!a.zero_at_origin()) return false;
    return true;
  }

  double lipschitz_product() const {
    double p = 1.0;
    for (const auto& a : activations) p *= a.lipschitz;
    return p;
  }
};

/// Uniform-width spec with the same activation in every hidden layer.
inline NetworkSpec make_spec(std::size_t h, std::size_t d, std::size_t width,
                             const ActivationProfile& act) {
  NetworkSpec s;
  s.input_dim = h;
  s.depth = d;
  s.widths.assign(d - 1, width);
  s.activations.assign(d - 1, act);
  s.validate();
  return s;
}

/// Weight matrices W_1..W_{d-1} and the output vector w_d.
struct NetworkParams {
  std::vector<Matrix> layers;
  Vector output;

  static NetworkParams zeros(const NetworkSpec& spec) {
    NetworkParams p;
    for (std::size_t i = 0; i < spec.hidden_layers(); ++i)
      p.layers.push_back(Matrix::Zero(spec.widths[i], spec.fan_in(i)));
    p.output = Vector::Zero(spec.widths.back());
    return p;
  }

  std::size_t parameter_count() const {
    std::size_t c = static_cast<std::size_t>(output.size());
    for (const auto& w : layers) c += static_cast<std::size_t>(w.size());
    return c;
  }

  /// Flat view used by finite-difference checks: layers in order, then output.
  double& entry(std::size_t k) {
    for (auto& w : layers) {
      if (k < static_cast<std::size_t>(w.size())) return w.data()[k];
      k -= static_cast<std::size_t>(w.size());
    }
    return output[static_cast<Eigen::Index>(k)];
  }
  double entry(std::size_t k) const { return const_cast<NetworkParams*>(this)->entry(k); }
};

/// Partial derivatives of f with respect to every entry of NetworkParams.
struct GradientBundle {
  std::vector<Matrix> layers;
  Vector output;

  double entry(std::size_t k) const {
    for (const auto& w : layers) {
      if (k < static_cast<std::size_t>(w.size())) return w.data()[k];
      k -= static_cast<std::size_t>(w.size());
    }
    return output[static_cast<Eigen::Index>(k)];
  }
};

inline void check_shapes(const NetworkSpec& spec, const NetworkParams& params) {
  if (params.layers.size() != spec.hidden_layers())
    throw ShapeError("parameter set has " + std::to_string(params.layers.size()) +
                     " weight matrices, spec needs " + std::to_string(spec.hidden_layers()));
  for (std::size_t i = 0; i < spec.hidden_layers(); ++i) {
    const auto& w = params.layers[i];
    if (static_cast<std::size_t>(w.rows()) != spec.widths[i] ||
        static_cast<std::size_t>(w.cols()) != spec.fan_in(i))
      throw ShapeError("layer " + std::to_string(i + 1) + " is " + std::to_string(w.rows()) +
                       "x" + std::to_string(w.cols()) + ", expected " +
                       std::to_string(spec.widths[i]) + "x" + std::to_string(spec.fan_in(i)));
  }
  if (static_cast<std::size_t>(params.output.size()) != spec.widths.back())
    throw ShapeError("output vector has length " + std::to_string(params.output.size()) +
                     ", expected " + std::to_string(spec.widths.back()));
}

namespace detail {

inline Matrix apply(const ActivationProfile& act, const Matrix& z) {
  return z.unaryExpr([&act](double v) { return act(v); });
}

inline Matrix apply_derivative(const ActivationProfile& act, const Matrix& z) {
  return z.unaryExpr([&act](double v) { return act.derivative(v); });
}

}  // namespace detail

/// Layer activations for a batch of inputs stored one per column.
struct ForwardTrace {
  std::vector<Matrix> pre;   // W_i a_{i-1}
  std::vector<Matrix> post;  // a_i, post[0] is the input batch
  Eigen::RowVectorXd output;
};

inline ForwardTrace forward_trace(const NetworkSpec& spec, const NetworkParams& params,
                                  const Matrix& columns) {
  check_shapes(spec, params);
  if (static_cast<std::size_t>(columns.rows()) != spec.input_dim)
    throw ShapeError("input has dimension " + std::to_string(columns.rows()) +
                     ", network expects " + std::to_string(spec.input_dim));
  ForwardTrace t;
  t.post.push_back(columns);
  for (std::size_t i = 0; i < spec.hidden_layers(); ++i) {
    t.pre.push_back(params.layers[i] * t.post.back());
    t.post.push_back(detail::apply(spec.activations[i], t.pre.back()));
  }
  t.output = params.output.transpose() * t.post.back();
  return t;
}

/// f(x) for each column of `columns`.
inline Eigen::RowVectorXd forward_batch(const NetworkSpec& spec, const NetworkParams& params,
                                        const Matrix& columns) {
  return forward_trace(spec, params, columns).output;
}

inline double forward(const NetworkSpec& spec, const NetworkParams& params, const Vector& x) {
  return forward_batch(spec, params, Matrix(x))(0);
}

/// sum_k c_k f(z_k) and its gradient, by reverse-mode accumulation over the
/// batch. `coeffs` has one entry per column.
inline double weighted_value_and_grad(const NetworkSpec& spec, const NetworkParams& params,
                                      const Matrix& columns, const Vector& coeffs,
                                      GradientBundle& grad,
                                      Eigen::RowVectorXd* outputs = nullptr) {
  if (coeffs.size() != columns.cols())
    throw ShapeError("coefficient count does not match the number of inputs");
  const ForwardTrace t = forward_trace(spec, params, columns);
  const std::size_t layers = spec.hidden_layers();
  grad.layers.resize(layers);
  grad.output = t.post.back() * coeffs;
  // delta for the last hidden layer: w_d c^T, masked by s'(z)
  Matrix delta = (params.output * coeffs.transpose())
                     .cwiseProduct(detail::apply_derivative(spec.activations[layers - 1],
                                                            t.pre[layers - 1]));
  for (std::size_t i = layers; i-- > 0;) {
    grad.layers[i] = delta * t.post[i].transpose();
    if (i > 0) {
      delta = (params.layers[i].transpose() * delta)
                  .cwiseProduct(detail::apply_derivative(spec.activations[i - 1], t.pre[i - 1]));
    }
  }
  if (outputs) *outputs = t.output;
  return t.output.dot(coeffs.transpose());
}

inline GradientBundle grad_params(const NetworkSpec& spec, const NetworkParams& params,
                                  const Vector& x) {
  GradientBundle g;
  weighted_value_and_grad(spec, params, Matrix(x), Vector::Ones(1), g);
  return g;
}

}  // namespace nndist
