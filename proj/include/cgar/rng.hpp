#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace cgar {

// Single deterministic random stream. All stochastic consumers in a training
// job draw from one Rng in a fixed order, so a seed fully determines a run.
// Normal draws use Box-Muller without caching the spare value: every normal()
// call consumes exactly two engine outputs, which keeps stream accounting
// trivial when reasoning about bit-equivalence between code paths.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    // avoid log(0)
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  Eigen::VectorXd normal_vec(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  // filled column by column, matching per-sample draw order
  Eigen::MatrixXd normal_mat(int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int c = 0; c < cols; ++c)
      for (int r = 0; r < rows; ++r) m(r, c) = normal();
    return m;
  }

  // integer in [0, n)
  int uniform_int(int n) {
    int i = static_cast<int>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cgar
