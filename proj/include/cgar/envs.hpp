#pragma once

#include <cmath>
#include <cstdio>
#include <memory>
#include <string>

#include <Eigen/Dense>

#include "cgar/nn.hpp"
#include "cgar/rng.hpp"

namespace cgar {

struct EnvSpec {
  std::string name;
  int observation_dim = 0;
  int action_dim = 0;
  int max_episode_steps = 0;
};

struct StepResult {
  Eigen::VectorXd next_state;
  double reward = 0.0;
  bool done = false;
};

class Env {
 public:
  virtual ~Env() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual Eigen::VectorXd reset(Rng& rng) = 0;
  virtual StepResult step(const Eigen::VectorXd& action) = 0;
};

namespace detail {

// wrap to (-pi, pi]
inline double wrap_angle(double x) {
  x = std::fmod(x + M_PI, 2.0 * M_PI);
  if (x <= 0.0) x += 2.0 * M_PI;
  return x - M_PI;
}

inline double clip(double x, double lo, double hi) {
  return x < lo ? lo : (x > hi ? hi : x);
}

inline Eigen::VectorXd clip_action(const Eigen::VectorXd& a, const char* env) {
  Eigen::VectorXd out = a;
  bool clipped = false;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (out[i] < -1.0 || out[i] > 1.0) {
      out[i] = clip(out[i], -1.0, 1.0);
      clipped = true;
    }
  }
  if (clipped)
    std::fprintf(stderr, "warning: %s action out of [-1,1], clipped\n", env);
  return out;
}

}  // namespace detail

// Classic torque-limited swing-up. Observation [cos th, sin th, thdot],
// torque u = 2*action, reward -(wrap(th)^2 + 0.1 thdot^2 + 0.001 u^2)
// computed on the pre-step state, 200-step episodes.
class PendulumEnv : public Env {
 public:
  PendulumEnv() : spec_{"pendulum", 3, 1, 200} {}

  const EnvSpec& spec() const override { return spec_; }

  Eigen::VectorXd reset(Rng& rng) override {
    theta_ = rng.uniform(-M_PI, M_PI);
    theta_dot_ = rng.uniform(-1.0, 1.0);
    steps_ = 0;
    return observation();
  }

  StepResult step(const Eigen::VectorXd& action) override {
    if (action.size() != 1)
      throw ContractViolation("pendulum: action must be 1-d");
    if (steps_ >= spec_.max_episode_steps)
      throw ContractViolation("pendulum: episode already done");
    const double u = 2.0 * detail::clip_action(action, "pendulum")[0];

    const double cost = detail::wrap_angle(theta_) * detail::wrap_angle(theta_) +
                        0.1 * theta_dot_ * theta_dot_ + 0.001 * u * u;

    constexpr double g = 10.0, m = 1.0, l = 1.0, dt = 0.05;
    const double theta_ddot =
        3.0 * g / (2.0 * l) * std::sin(theta_) + 3.0 / (m * l * l) * u;
    theta_dot_ = detail::clip(theta_dot_ + theta_ddot * dt, -8.0, 8.0);
    theta_ += theta_dot_ * dt;
    ++steps_;

    return {observation(), -cost, steps_ >= spec_.max_episode_steps};
  }

  // place the pendulum at a known state (test hook)
  Eigen::VectorXd set_state(double theta, double theta_dot) {
    theta_ = theta;
    theta_dot_ = theta_dot;
    steps_ = 0;
    return observation();
  }

 private:
  Eigen::VectorXd observation() const {
    Eigen::VectorXd o(3);
    o << std::cos(theta_), std::sin(theta_), theta_dot_;
    return o;
  }

  EnvSpec spec_;
  double theta_ = 0.0, theta_dot_ = 0.0;
  int steps_ = 0;
};

// 2-d point mass pulled toward the origin. Observation [pos, vel] (4-d),
// force = 0.1*action, velocity damped by 0.95 each step,
// reward = -|pos|^2 - 0.01|action|^2, 100-step episodes.
class PointMassEnv : public Env {
 public:
  PointMassEnv() : spec_{"pointmass", 4, 2, 100} {}

  const EnvSpec& spec() const override { return spec_; }

  Eigen::VectorXd reset(Rng& rng) override {
    pos_ << rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0);
    vel_.setZero();
    steps_ = 0;
    return observation();
  }

  StepResult step(const Eigen::VectorXd& action) override {
    if (action.size() != 2)
      throw ContractViolation("pointmass: action must be 2-d");
    if (steps_ >= spec_.max_episode_steps)
      throw ContractViolation("pointmass: episode already done");
    const Eigen::VectorXd a = detail::clip_action(action, "pointmass");

    vel_ = 0.95 * (vel_ + 0.1 * a.head<2>());
    pos_ += vel_;
    ++steps_;

    const double reward = -pos_.squaredNorm() - 0.01 * a.squaredNorm();
    return {observation(), reward, steps_ >= spec_.max_episode_steps};
  }

 private:
  Eigen::VectorXd observation() const {
    Eigen::VectorXd o(4);
    o << pos_[0], pos_[1], vel_[0], vel_[1];
    return o;
  }

  EnvSpec spec_;
  Eigen::Vector2d pos_{0.0, 0.0}, vel_{0.0, 0.0};
  int steps_ = 0;
};

inline std::unique_ptr<Env> make_env(const std::string& name) {
  if (name == "pendulum") return std::make_unique<PendulumEnv>();
  if (name == "pointmass") return std::make_unique<PointMassEnv>();
  throw ContractViolation("unknown env: " + name);
}

}  // namespace cgar
