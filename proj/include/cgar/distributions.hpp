#pragma once

#include <cmath>
#include <utility>

#include <Eigen/Dense>

#include "cgar/nn.hpp"
#include "cgar/rng.hpp"

namespace cgar {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

// Diagonal Gaussian over pre-squash space; actions are tanh of samples.
struct PolicyDistribution {
  Eigen::VectorXd mean;
  Eigen::VectorXd log_std;  // clamped to [kLogStdMin, kLogStdMax]

  int dims() const { return static_cast<int>(mean.size()); }
};

inline PolicyDistribution make_policy(Eigen::VectorXd mean,
                                      Eigen::VectorXd log_std_raw) {
  if (mean.size() != log_std_raw.size())
    throw ContractViolation("policy: mean/log_std length mismatch");
  PolicyDistribution d;
  d.mean = std::move(mean);
  d.log_std = log_std_raw.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  return d;
}

struct DiscreteDistribution {
  Eigen::VectorXd probs;  // non-negative, sums to 1 within 1e-12
};

// Reparameterized draw: u = mean + exp(log_std) * noise, action = tanh(u).
// Returns (action, presquash).
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> sample_squashed(
    const PolicyDistribution& dist, const Eigen::VectorXd& noise) {
  if (noise.size() != dist.mean.size())
    throw ContractViolation("sample_squashed: noise length mismatch");
  Eigen::VectorXd u =
      dist.mean + dist.log_std.array().exp().matrix().cwiseProduct(noise);
  Eigen::VectorXd a = u.array().tanh();
  return {std::move(a), std::move(u)};
}

namespace detail {

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// log(1 - tanh(u)^2) = 2*(log 2 - u - softplus(-2u)); stable for large |u|
inline double log_one_minus_tanh_sq(double u) {
  return 2.0 * (M_LN2 - u - softplus(-2.0 * u));
}

}  // namespace detail

// Log-density of the squashed action a = tanh(u), evaluated from the
// pre-squash value u: Gaussian log-density minus the tanh change-of-variables
// correction.
inline double log_prob_squashed(const PolicyDistribution& dist,
                                const Eigen::VectorXd& presquash) {
  if (presquash.size() != dist.mean.size())
    throw ContractViolation("log_prob_squashed: length mismatch");
  double lp = 0.0;
  for (int i = 0; i < dist.dims(); ++i) {
    const double ls = dist.log_std[i];
    const double z = (presquash[i] - dist.mean[i]) / std::exp(ls);
    lp += -0.5 * std::log(2.0 * M_PI) - ls - 0.5 * z * z;
    lp -= detail::log_one_minus_tanh_sq(presquash[i]);
  }
  if (!std::isfinite(lp)) throw NumericError("log_prob_squashed: non-finite");
  return lp;
}

// Max-subtracted softmax.
inline DiscreteDistribution softmax(const Eigen::VectorXd& scores) {
  if (scores.size() == 0) throw ContractViolation("softmax: empty scores");
  if (!scores.allFinite()) throw ContractViolation("softmax: non-finite scores");
  Eigen::VectorXd e = (scores.array() - scores.maxCoeff()).exp();
  return {e / e.sum()};
}

// Inverse-CDF draw over the given order.
inline int sample_categorical(const DiscreteDistribution& dist, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  const int n = static_cast<int>(dist.probs.size());
  for (int i = 0; i < n; ++i) {
    cum += dist.probs[i];
    if (u < cum) return i;
  }
  return n - 1;
}

}  // namespace cgar
