#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cgar/distributions.hpp"
#include "cgar/nn.hpp"
#include "cgar/rng.hpp"

namespace cgar {

// Synthetic classification data: C Gaussian blobs on a circle of radius 2.
struct DemoDataset {
  Eigen::MatrixXd inputs;  // 2 x N
  std::vector<int> labels;
  std::vector<int> train_idx, eval_idx;  // disjoint 80/20 split
  int num_classes = 0;

  Eigen::MatrixXd centers() const {
    Eigen::MatrixXd c(2, num_classes);
    for (int k = 0; k < num_classes; ++k) {
      const double ang = 2.0 * M_PI * k / num_classes;
      c.col(k) << 2.0 * std::cos(ang), 2.0 * std::sin(ang);
    }
    return c;
  }
};

inline DemoDataset generate_dataset(int n_per_class, int num_classes,
                                    double spread, std::uint64_t seed) {
  if (num_classes < 2) throw ContractViolation("dataset: need >= 2 classes");
  Rng rng(seed);
  DemoDataset d;
  d.num_classes = num_classes;
  const int n = n_per_class * num_classes;
  d.inputs.resize(2, n);
  d.labels.resize(n);
  Eigen::MatrixXd centers = d.centers();
  for (int k = 0; k < num_classes; ++k) {
    for (int i = 0; i < n_per_class; ++i) {
      const int idx = k * n_per_class + i;
      d.inputs.col(idx) = centers.col(k) + spread * rng.normal_vec(2);
      d.labels[idx] = k;
    }
  }
  // stratified 80/20 split keeps classes balanced
  for (int k = 0; k < num_classes; ++k) {
    const int n_train = (n_per_class * 4) / 5;
    for (int i = 0; i < n_per_class; ++i) {
      const int idx = k * n_per_class + i;
      (i < n_train ? d.train_idx : d.eval_idx).push_back(idx);
    }
  }
  return d;
}

// Accuracy ceiling: classify by nearest blob center.
inline double nearest_center_accuracy(const DemoDataset& d,
                                      const std::vector<int>& idx) {
  Eigen::MatrixXd centers = d.centers();
  int correct = 0;
  for (int i : idx) {
    int best = 0;
    double best_d = (d.inputs.col(i) - centers.col(0)).squaredNorm();
    for (int k = 1; k < d.num_classes; ++k) {
      const double dist = (d.inputs.col(i) - centers.col(k)).squaredNorm();
      if (dist < best_d) {
        best_d = dist;
        best = k;
      }
    }
    if (best == d.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / idx.size();
}

struct DistillResult {
  // index 0 is the untrained model, then one entry per epoch
  std::vector<double> acc_m1, acc_m2;
};

namespace detail {

inline double eval_accuracy(const MlpParams& net, const DemoDataset& d,
                            const std::vector<int>& idx) {
  int correct = 0;
  for (int i : idx) {
    Eigen::VectorXd logits = mlp_forward(net, d.inputs.col(i));
    Eigen::Index argmax;
    logits.maxCoeff(&argmax);
    if (static_cast<int>(argmax) == d.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / idx.size();
}

}  // namespace detail

// Two identical MLPs: M1 fits the labels, M2 fits softmax of M1's current
// logits (never the labels). Alternating per-minibatch updates: M1 step, then
// M2 step. variant "ce" trains M1 with cross-entropy, "mse" with mean squared
// error against the one-hot labels; M2's soft cross-entropy is unchanged.
inline DistillResult train_pair(const DemoDataset& data, int epochs,
                                std::uint64_t seed,
                                const std::string& variant) {
  if (variant != "ce" && variant != "mse")
    throw ContractViolation("train_pair: variant must be ce or mse");
  const int C = data.num_classes;
  Rng rng(seed);
  std::vector<int> arch{2, 16, 16, C};
  MlpParams m1 = MlpParams::random_init(arch, Activation::relu, rng);
  MlpParams m2 = MlpParams::random_init(arch, Activation::relu, rng);
  AdamState opt1 = AdamState::zeros_like(m1);
  AdamState opt2 = AdamState::zeros_like(m2);
  constexpr double lr = 1e-3;
  constexpr int batch = 32;

  DistillResult res;
  res.acc_m1.push_back(detail::eval_accuracy(m1, data, data.eval_idx));
  res.acc_m2.push_back(detail::eval_accuracy(m2, data, data.eval_idx));

  std::vector<int> order = data.train_idx;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    // Fisher-Yates on the shared stream
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
      std::swap(order[i], order[rng.uniform_int(i + 1)]);

    for (std::size_t start = 0; start < order.size(); start += batch) {
      const int B = static_cast<int>(
          std::min<std::size_t>(batch, order.size() - start));
      Eigen::MatrixXd X(2, B);
      Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(C, B);
      for (int j = 0; j < B; ++j) {
        X.col(j) = data.inputs.col(order[start + j]);
        onehot(data.labels[order[start + j]], j) = 1.0;
      }

      // M1 step
      Eigen::MatrixXd z1 = mlp_forward_batch(m1, X);
      Eigen::MatrixXd up1(C, B);
      if (variant == "ce") {
        for (int j = 0; j < B; ++j)
          up1.col(j) = (softmax(z1.col(j)).probs - onehot.col(j)) / B;
      } else {
        up1 = 2.0 * (z1 - onehot) / (B * C);
      }
      GradBuffer g1 = GradBuffer::zeros_like(m1);
      mlp_backward_batch(m1, X, up1, &g1);
      adam_step(m1, g1, opt1, lr);

      // M2 step against M1's post-update soft targets
      Eigen::MatrixXd t = mlp_forward_batch(m1, X);
      Eigen::MatrixXd z2 = mlp_forward_batch(m2, X);
      Eigen::MatrixXd up2(C, B);
      for (int j = 0; j < B; ++j)
        up2.col(j) =
            (softmax(z2.col(j)).probs - softmax(t.col(j)).probs) / B;
      GradBuffer g2 = GradBuffer::zeros_like(m2);
      mlp_backward_batch(m2, X, up2, &g2);
      adam_step(m2, g2, opt2, lr);
    }

    res.acc_m1.push_back(detail::eval_accuracy(m1, data, data.eval_idx));
    res.acc_m2.push_back(detail::eval_accuracy(m2, data, data.eval_idx));
  }
  return res;
}

}  // namespace cgar
