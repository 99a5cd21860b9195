#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cgar/envs.hpp"

using namespace cgar;

namespace {

Eigen::VectorXd act1(double x) {
  Eigen::VectorXd a(1);
  a << x;
  return a;
}

Eigen::VectorXd act2(double x, double y) {
  Eigen::VectorXd a(2);
  a << x, y;
  return a;
}

// Independently coded straight-line pendulum integrator used as the
// trajectory oracle.
struct PendulumOracle {
  double th, thd;
  double reward_and_step(double action) {
    const double u = 2.0 * action;
    double w = std::fmod(th + M_PI, 2 * M_PI);
    if (w <= 0) w += 2 * M_PI;
    w -= M_PI;
    const double r = -(w * w + 0.1 * thd * thd + 0.001 * u * u);
    const double acc = 15.0 * std::sin(th) + 3.0 * u;
    thd += acc * 0.05;
    if (thd > 8) thd = 8;
    if (thd < -8) thd = -8;
    th += thd * 0.05;
    return r;
  }
};

}  // namespace

TEST_CASE("make_env: names and specs") {
  auto p = make_env("pendulum");
  CHECK(p->spec().observation_dim == 3);
  CHECK(p->spec().action_dim == 1);
  CHECK(p->spec().max_episode_steps == 200);
  auto m = make_env("pointmass");
  CHECK(m->spec().observation_dim == 4);
  CHECK(m->spec().action_dim == 2);
  CHECK(m->spec().max_episode_steps == 100);
  CHECK_THROWS_AS(make_env("mujoco"), ContractViolation);
}

TEST_CASE("reset: fixed seed gives identical initial state") {
  auto env = make_env("pendulum");
  Rng r1(77), r2(77);
  CHECK(env->reset(r1) == make_env("pendulum")->reset(r2));
}

TEST_CASE("reset: pendulum angles are centered (uniformity check)") {
  PendulumEnv env;
  Rng rng(5);
  const int n = 10000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd o = env.reset(rng);
    sum += std::atan2(o[1], o[0]);
  }
  // theta ~ U(-pi, pi): mean 0, std pi/sqrt(3); 3 sigma of the sample mean
  CHECK(std::abs(sum / n) < 3.0 * (M_PI / std::sqrt(3.0)) / std::sqrt(n));
}

TEST_CASE("reset: observations finite and within bounds") {
  PendulumEnv p;
  PointMassEnv m;
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd o = p.reset(rng);
    CHECK(o.allFinite());
    CHECK(std::abs(o[0]) <= 1.0);
    CHECK(std::abs(o[1]) <= 1.0);
    CHECK(std::abs(o[2]) <= 1.0);  // initial velocity U(-1,1)
    Eigen::VectorXd om = m.reset(rng);
    CHECK(om.allFinite());
    CHECK(om.cwiseAbs().maxCoeff() <= 1.0);
  }
}

TEST_CASE("pendulum: upright fixed point") {
  PendulumEnv env;
  Eigen::VectorXd before = env.set_state(0.0, 0.0);
  StepResult sr = env.step(act1(0.0));
  CHECK(sr.reward == 0.0);
  CHECK(sr.next_state == before);
}

TEST_CASE("pendulum: hanging reward is -pi^2") {
  PendulumEnv env;
  env.set_state(M_PI, 0.0);
  CHECK(env.step(act1(0.0)).reward == doctest::Approx(-M_PI * M_PI));
}

TEST_CASE("pendulum: 20-step rollout matches the independent integrator") {
  PendulumEnv env;
  Rng rng(21);
  Eigen::VectorXd obs = env.reset(rng);
  PendulumOracle oracle{std::atan2(obs[1], obs[0]), obs[2]};

  Rng arng(33);
  for (int i = 0; i < 20; ++i) {
    const double a = arng.uniform(-1.0, 1.0);
    StepResult sr = env.step(act1(a));
    const double r = oracle.reward_and_step(a);
    CHECK(sr.reward == doctest::Approx(r).epsilon(1e-12));
    CHECK(sr.next_state[0] == doctest::Approx(std::cos(oracle.th)).epsilon(1e-12));
    CHECK(sr.next_state[1] == doctest::Approx(std::sin(oracle.th)).epsilon(1e-12));
    CHECK(sr.next_state[2] == doctest::Approx(oracle.thd).epsilon(1e-12));
  }
}

TEST_CASE("pointmass: rollout matches an independent integrator") {
  PointMassEnv env;
  Rng rng(4);
  Eigen::VectorXd obs = env.reset(rng);
  double px = obs[0], py = obs[1], vx = 0.0, vy = 0.0;
  Rng arng(9);
  for (int i = 0; i < 30; ++i) {
    const double ax = arng.uniform(-1.0, 1.0), ay = arng.uniform(-1.0, 1.0);
    StepResult sr = env.step(act2(ax, ay));
    vx = 0.95 * (vx + 0.1 * ax);
    vy = 0.95 * (vy + 0.1 * ay);
    px += vx;
    py += vy;
    const double r = -(px * px + py * py) - 0.01 * (ax * ax + ay * ay);
    CHECK(sr.reward == doctest::Approx(r).epsilon(1e-12));
    CHECK(sr.next_state[0] == doctest::Approx(px).epsilon(1e-12));
    CHECK(sr.next_state[3] == doctest::Approx(vy).epsilon(1e-12));
  }
}

TEST_CASE("determinism: seed plus action sequence fixes the trajectory") {
  for (const char* name : {"pendulum", "pointmass"}) {
    auto e1 = make_env(name);
    auto e2 = make_env(name);
    Rng r1(55), r2(55);
    e1->reset(r1);
    e2->reset(r2);
    Rng arng(66);
    const int d = e1->spec().action_dim;
    for (int i = 0; i < 50; ++i) {
      Eigen::VectorXd a(d);
      for (int j = 0; j < d; ++j) a[j] = arng.uniform(-1, 1);
      StepResult s1 = e1->step(a);
      StepResult s2 = e2->step(a);
      CHECK(s1.next_state == s2.next_state);
      CHECK(s1.reward == s2.reward);
    }
  }
}

TEST_CASE("rewards are never positive and episodes end at the horizon") {
  for (const char* name : {"pendulum", "pointmass"}) {
    auto env = make_env(name);
    Rng rng(123);
    env->reset(rng);
    const int horizon = env->spec().max_episode_steps;
    const int d = env->spec().action_dim;
    for (int i = 0; i < horizon; ++i) {
      Eigen::VectorXd a(d);
      for (int j = 0; j < d; ++j) a[j] = rng.uniform(-1, 1);
      StepResult sr = env->step(a);
      CHECK(sr.reward <= 0.0);
      CHECK(sr.next_state.allFinite());
      CHECK(sr.done == (i == horizon - 1));
    }
    Eigen::VectorXd a = Eigen::VectorXd::Zero(d);
    CHECK_THROWS_AS(env->step(a), ContractViolation);  // episode already done
  }
}

TEST_CASE("out-of-bounds actions are clipped") {
  PointMassEnv env;
  Rng rng(2);
  env.reset(rng);
  StepResult big = env.step(act2(5.0, -5.0));

  PointMassEnv env2;
  Rng rng2(2);
  env2.reset(rng2);
  StepResult one = env2.step(act2(1.0, -1.0));
  CHECK(big.next_state == one.next_state);
}
