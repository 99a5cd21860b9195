#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cgar/rng.hpp"

namespace cgar {

struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Activation { relu, tanh, identity };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "identity") return Activation::identity;
  throw ContractViolation("unknown activation: " + s);
}

// Dense MLP parameters. Hidden layers use `activation`, the output layer is
// always identity. weights[l] has shape (layer_sizes[l+1], layer_sizes[l]).
struct MlpParams {
  std::vector<int> layer_sizes;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  Activation activation = Activation::relu;

  int num_layers() const { return static_cast<int>(weights.size()); }
  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }

  bool finite() const {
    for (const auto& w : weights)
      if (!w.allFinite()) return false;
    for (const auto& b : biases)
      if (!b.allFinite()) return false;
    return true;
  }

  static MlpParams zeros(std::vector<int> sizes, Activation act) {
    if (sizes.size() < 2) throw ContractViolation("need at least two layers");
    MlpParams p;
    p.layer_sizes = std::move(sizes);
    p.activation = act;
    for (std::size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
      if (p.layer_sizes[l] <= 0 || p.layer_sizes[l + 1] <= 0)
        throw ContractViolation("layer sizes must be positive");
      p.weights.emplace_back(
          Eigen::MatrixXd::Zero(p.layer_sizes[l + 1], p.layer_sizes[l]));
      p.biases.emplace_back(Eigen::VectorXd::Zero(p.layer_sizes[l + 1]));
    }
    return p;
  }

  // uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], seeded
  static MlpParams random_init(std::vector<int> sizes, Activation act,
                               Rng& rng) {
    MlpParams p = zeros(std::move(sizes), act);
    for (int l = 0; l < p.num_layers(); ++l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(p.weights[l].cols()));
      for (Eigen::Index j = 0; j < p.weights[l].cols(); ++j)
        for (Eigen::Index i = 0; i < p.weights[l].rows(); ++i)
          p.weights[l](i, j) = rng.uniform(-bound, bound);
      for (Eigen::Index i = 0; i < p.biases[l].size(); ++i)
        p.biases[l][i] = rng.uniform(-bound, bound);
    }
    return p;
  }
};

// Gradient accumulator, shape-congruent with an MlpParams. `input` carries the
// gradient with respect to the network input (one column per batch sample).
struct GradBuffer {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  Eigen::MatrixXd input;

  static GradBuffer zeros_like(const MlpParams& p) {
    GradBuffer g;
    for (int l = 0; l < p.num_layers(); ++l) {
      g.weights.emplace_back(
          Eigen::MatrixXd::Zero(p.weights[l].rows(), p.weights[l].cols()));
      g.biases.emplace_back(Eigen::VectorXd::Zero(p.biases[l].size()));
    }
    return g;
  }

  bool finite() const {
    for (const auto& w : weights)
      if (!w.allFinite()) return false;
    for (const auto& b : biases)
      if (!b.allFinite()) return false;
    return true;
  }
};

namespace detail {

inline Eigen::MatrixXd apply_activation(const Eigen::MatrixXd& z,
                                        Activation act) {
  switch (act) {
    case Activation::relu: return z.cwiseMax(0.0);
    case Activation::tanh: return z.array().tanh().matrix();
    case Activation::identity: return z;
  }
  return z;
}

// derivative as a function of the pre-activation z
inline Eigen::MatrixXd activation_deriv(const Eigen::MatrixXd& z,
                                        Activation act) {
  switch (act) {
    case Activation::relu:
      return (z.array() > 0.0).cast<double>().matrix();
    case Activation::tanh: {
      Eigen::ArrayXXd t = z.array().tanh();
      return (1.0 - t * t).matrix();
    }
    case Activation::identity:
      return Eigen::MatrixXd::Ones(z.rows(), z.cols());
  }
  return Eigen::MatrixXd::Ones(z.rows(), z.cols());
}

}  // namespace detail

// Batched forward pass: one sample per column of X.
inline Eigen::MatrixXd mlp_forward_batch(const MlpParams& p,
                                         const Eigen::MatrixXd& X) {
  if (X.rows() != p.input_dim())
    throw ContractViolation("mlp_forward: input dim mismatch");
  Eigen::MatrixXd a = X;
  for (int l = 0; l < p.num_layers(); ++l) {
    Eigen::MatrixXd z = (p.weights[l] * a).colwise() + p.biases[l];
    a = (l + 1 < p.num_layers()) ? detail::apply_activation(z, p.activation)
                                 : std::move(z);
  }
  return a;
}

inline Eigen::VectorXd mlp_forward(const MlpParams& p,
                                   const Eigen::VectorXd& input) {
  return mlp_forward_batch(p, input);
}

// Reverse-mode gradients of <upstream, output> with respect to all parameters
// and the input, accumulated over the batch. Parameter gradients are ADDED to
// *grads when it is non-null; the returned matrix holds per-column input
// gradients.
inline Eigen::MatrixXd mlp_backward_batch(const MlpParams& p,
                                          const Eigen::MatrixXd& X,
                                          const Eigen::MatrixXd& upstream,
                                          GradBuffer* grads) {
  if (X.rows() != p.input_dim())
    throw ContractViolation("mlp_backward: input dim mismatch");
  if (upstream.rows() != p.output_dim() || upstream.cols() != X.cols())
    throw ContractViolation("mlp_backward: upstream shape mismatch");

  const int L = p.num_layers();
  std::vector<Eigen::MatrixXd> acts(L + 1);  // acts[l] = input to layer l
  std::vector<Eigen::MatrixXd> pre(L);
  acts[0] = X;
  for (int l = 0; l < L; ++l) {
    pre[l] = (p.weights[l] * acts[l]).colwise() + p.biases[l];
    acts[l + 1] = (l + 1 < L) ? detail::apply_activation(pre[l], p.activation)
                              : pre[l];
  }

  Eigen::MatrixXd delta = upstream;
  for (int l = L - 1; l >= 0; --l) {
    if (grads) {
      grads->weights[l].noalias() += delta * acts[l].transpose();
      grads->biases[l] += delta.rowwise().sum();
    }
    Eigen::MatrixXd dx = p.weights[l].transpose() * delta;
    if (l > 0)
      delta = dx.cwiseProduct(detail::activation_deriv(pre[l - 1], p.activation));
    else
      return dx;
  }
  return Eigen::MatrixXd();  // unreachable for valid networks
}

inline GradBuffer mlp_backward(const MlpParams& p, const Eigen::VectorXd& input,
                               const Eigen::VectorXd& upstream) {
  GradBuffer g = GradBuffer::zeros_like(p);
  g.input = mlp_backward_batch(p, input, upstream, &g);
  return g;
}

// Adam state for one network. Step counter increments by exactly one per
// adam_step call.
struct AdamState {
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState zeros_like(const MlpParams& p) {
    AdamState s;
    for (int l = 0; l < p.num_layers(); ++l) {
      s.m_w.emplace_back(Eigen::MatrixXd::Zero(p.weights[l].rows(), p.weights[l].cols()));
      s.v_w.emplace_back(Eigen::MatrixXd::Zero(p.weights[l].rows(), p.weights[l].cols()));
      s.m_b.emplace_back(Eigen::VectorXd::Zero(p.biases[l].size()));
      s.v_b.emplace_back(Eigen::VectorXd::Zero(p.biases[l].size()));
    }
    return s;
  }
};

namespace detail {

template <typename T>
void adam_update(T& param, const T& grad, T& m, T& v, double lr, double b1,
                 double b2, double eps, double bc1, double bc2) {
  m = b1 * m + (1.0 - b1) * grad;
  v = (b2 * v.array() + (1.0 - b2) * grad.array().square()).matrix();
  param -= (lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps)).matrix();
}

}  // namespace detail

// Standard Adam with bias correction. Rejects non-finite gradients without
// touching params or state.
inline void adam_step(MlpParams& p, const GradBuffer& g, AdamState& s,
                      double lr) {
  if (lr <= 0.0) throw ContractViolation("adam_step: lr must be positive");
  if (!g.finite()) throw NumericError("adam_step: non-finite gradient");
  s.t += 1;
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  for (int l = 0; l < p.num_layers(); ++l) {
    detail::adam_update(p.weights[l], g.weights[l], s.m_w[l], s.v_w[l], lr,
                        s.beta1, s.beta2, s.eps, bc1, bc2);
    detail::adam_update(p.biases[l], g.biases[l], s.m_b[l], s.v_b[l], lr,
                        s.beta1, s.beta2, s.eps, bc1, bc2);
  }
}

// Scalar Adam for single learned coefficients (the entropy temperature).
struct ScalarAdam {
  double m = 0.0, v = 0.0;
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

inline void adam_step_scalar(double& param, double grad, ScalarAdam& s,
                             double lr) {
  if (lr <= 0.0) throw ContractViolation("adam_step: lr must be positive");
  if (!std::isfinite(grad)) throw NumericError("adam_step: non-finite gradient");
  s.t += 1;
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  s.m = s.beta1 * s.m + (1.0 - s.beta1) * grad;
  s.v = s.beta2 * s.v + (1.0 - s.beta2) * grad * grad;
  param -= lr * (s.m / bc1) / (std::sqrt(s.v / bc2) + s.eps);
}

}  // namespace cgar
