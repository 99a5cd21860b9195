#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "cgar/nn.hpp"
#include "cgar/rng.hpp"

namespace cgar {

struct Transition {
  Eigen::VectorXd state;
  Eigen::VectorXd action;
  double reward = 0.0;
  Eigen::VectorXd next_state;
  bool done = false;
};

// Fixed-capacity FIFO buffer with uniform with-replacement sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ContractViolation("replay: capacity must be positive");
    storage_.reserve(capacity);
  }

  void push(Transition t) {
    if (storage_.size() < capacity_) {
      storage_.push_back(std::move(t));
    } else {
      storage_[cursor_] = std::move(t);
    }
    cursor_ = (cursor_ + 1) % capacity_;
  }

  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t cursor() const { return cursor_; }
  const Transition& at(std::size_t i) const { return storage_[i]; }

  // Uniform with replacement; an empty buffer cannot serve a non-empty batch.
  std::vector<Transition> sample_batch(std::size_t n, Rng& rng) const {
    if (n > 0 && storage_.empty())
      throw ContractViolation("replay: insufficient data");
    std::vector<Transition> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      out.push_back(storage_[static_cast<std::size_t>(
          rng.uniform_int(static_cast<int>(storage_.size())))]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::vector<Transition> storage_;
  std::size_t cursor_ = 0;
};

}  // namespace cgar
