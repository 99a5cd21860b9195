#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cgar/harness.hpp"

using namespace cgar;

namespace {

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.env = "pendulum";
  cfg.seed = 3;
  cfg.n_init = 150;
  cfg.n_train = 250;
  cfg.batch_size = 32;
  cfg.hidden_sizes = {16, 16};
  cfg.eval_interval = 100;
  cfg.eval_episodes = 2;
  return cfg;
}

RunRecord synthetic_record(const std::string& algo, const std::string& env,
                           std::uint64_t seed, std::vector<double> returns) {
  RunRecord r;
  r.config.algo = algo;
  r.config.env = env;
  r.config.seed = seed;
  long step = 1000;
  for (double v : returns) {
    r.evals.push_back({step, v, {v}});
    step += 1000;
  }
  return r;
}

}  // namespace

TEST_CASE("evaluate: deterministic given env and rng seed, episodes=1") {
  Rng init(1);
  auto env = make_env("pendulum");
  AgentState agent = AgentState::init(3, 1, {16, 16}, init);
  Rng r1(5), r2(5);
  auto env2 = make_env("pendulum");
  auto [m1, e1] = evaluate(agent, *env, 3, r1);
  auto [m2, e2] = evaluate(agent, *env2, 3, r2);
  CHECK(m1 == m2);
  CHECK(e1 == e2);

  Rng r3(5);
  auto env3 = make_env("pendulum");
  auto [m3, e3] = evaluate(agent, *env3, 1, r3);
  CHECK(e3.size() == 1);
  CHECK(m3 == e3[0]);
}

TEST_CASE("random policy on pendulum lands in the calibrated return band") {
  auto env = make_env("pendulum");
  Rng rng(17);
  const int episodes = 100;
  double total = 0.0;
  for (int ep = 0; ep < episodes; ++ep) {
    env->reset(rng);
    bool done = false;
    double ret = 0.0;
    while (!done) {
      Eigen::VectorXd a(1);
      a[0] = rng.uniform(-1, 1);
      StepResult sr = env->step(a);
      ret += sr.reward;
      done = sr.done;
    }
    total += ret;
  }
  const double mean = total / episodes;
  CHECK(mean > -1800.0);
  CHECK(mean < -900.0);
}

TEST_CASE("run_training: warmup only performs no updates") {
  TrainConfig cfg = small_config();
  cfg.n_train = 0;
  const std::string dir = "/tmp/cgar_warmup_test";
  std::filesystem::remove_all(dir);
  RunRecord rec = run_training(cfg, dir);
  CHECK(rec.train_rows.empty());
  CHECK(rec.evals.empty());

  // checkpoint equals a freshly initialized agent drawn from the same stream
  AgentState saved = load_checkpoint(dir + "/checkpoint.txt");
  Rng rng(cfg.seed);
  AgentState fresh = AgentState::init(3, 1, cfg.hidden_sizes, rng);
  for (int l = 0; l < fresh.actor.num_layers(); ++l) {
    CHECK(saved.actor.weights[l] == fresh.actor.weights[l]);
    CHECK(saved.critic1.weights[l] == fresh.critic1.weights[l]);
  }
}

TEST_CASE("run_training: identical configs give bit-identical records") {
  TrainConfig cfg = small_config();
  RunRecord a = run_training(cfg);
  RunRecord b = run_training(cfg);
  CHECK(metrics_csv_string(a) == metrics_csv_string(b));
  CHECK(!a.evals.empty());
  for (const auto& e : a.evals) CHECK(e.step % cfg.eval_interval == 0);
}

TEST_CASE("run_training: written metrics file parses back losslessly") {
  TrainConfig cfg = small_config();
  const std::string dir = "/tmp/cgar_roundtrip_test";
  std::filesystem::remove_all(dir);
  RunRecord rec = run_training(cfg, dir);
  std::ifstream is(dir + "/metrics.csv");
  RunRecord back = read_metrics_csv(is);
  REQUIRE(back.train_rows.size() == rec.train_rows.size());
  REQUIRE(back.evals.size() == rec.evals.size());
  for (std::size_t i = 0; i < rec.evals.size(); ++i) {
    CHECK(back.evals[i].step == rec.evals[i].step);
    CHECK(back.evals[i].mean_return == rec.evals[i].mean_return);
    CHECK(back.evals[i].ep_returns == rec.evals[i].ep_returns);
  }
  for (std::size_t i = 0; i < rec.train_rows.size(); ++i)
    CHECK(back.train_rows[i].metrics.critic_loss ==
          rec.train_rows[i].metrics.critic_loss);

  // config echo round-trip
  RunRecord loaded = load_run(dir);
  CHECK(loaded.config.seed == cfg.seed);
  CHECK(loaded.config.algo == cfg.algo);
  CHECK(loaded.config.hidden_sizes == cfg.hidden_sizes);
}

TEST_CASE("summarize: single-run arithmetic") {
  auto rec = synthetic_record("sac", "pendulum", 0, {-100.0, -50.0});
  auto rows = summarize({rec});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].mean_avg_return == doctest::Approx(-75.0));
  CHECK(rows[0].std_avg_return == doctest::Approx(0.0));
  CHECK(rows[0].seeds == 1);
}

TEST_CASE("summarize: two seeds use the population standard deviation") {
  auto r1 = synthetic_record("sac", "pendulum", 0, {-60.0, -80.0});  // avg -70
  auto r2 = synthetic_record("sac", "pendulum", 1, {-90.0, -70.0});  // avg -80
  auto rows = summarize({r1, r2});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].mean_avg_return == doctest::Approx(-75.0));
  CHECK(rows[0].std_avg_return == doctest::Approx(5.0));
  CHECK(rows[0].seeds == 2);
}

TEST_CASE("summarize: mismatched schedules are rejected") {
  auto r1 = synthetic_record("sac", "pendulum", 0, {-60.0, -80.0});
  auto r2 = synthetic_record("sac", "pendulum", 1, {-90.0});
  CHECK_THROWS_AS(summarize({r1, r2}), ContractViolation);
}

TEST_CASE("summary CSV matches the documented schema") {
  auto r1 = synthetic_record("cgar-sac", "pointmass", 0, {-10.0});
  std::ostringstream os;
  write_summary_csv(summarize({r1}), os);
  std::istringstream is(os.str());
  std::string header, row;
  std::getline(is, header);
  CHECK(header == "algo,env,seeds,mean_avg_return,std_avg_return");
  std::getline(is, row);
  CHECK(row == "cgar-sac,pointmass,1,-10,0");
}

TEST_CASE("learning curve export: single seed collapses, multi-seed spans") {
  auto r1 = synthetic_record("sac", "pendulum", 0, {-10.0});
  auto pts1 = learning_curve_export({r1});
  REQUIRE(pts1.size() == 1);
  CHECK(pts1[0].mean == pts1[0].min);
  CHECK(pts1[0].min == pts1[0].max);

  auto a = synthetic_record("sac", "pendulum", 0, {-10.0});
  auto b = synthetic_record("sac", "pendulum", 1, {-20.0});
  auto c = synthetic_record("sac", "pendulum", 2, {-30.0});
  auto pts = learning_curve_export({a, b, c});
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].mean == doctest::Approx(-20.0));
  CHECK(pts[0].min == doctest::Approx(-30.0));
  CHECK(pts[0].max == doctest::Approx(-10.0));
}

TEST_CASE("learning curve CSV round-trips") {
  std::vector<RunRecord> recs;
  for (int s = 0; s < 3; ++s)
    recs.push_back(synthetic_record("sac", "pendulum", s,
                                    {-100.0 - s, -50.0 + 2 * s, -25.5 * s}));
  auto pts = learning_curve_export(recs);
  std::ostringstream os;
  write_curve_csv(pts, os);
  std::istringstream is(os.str());
  auto back = read_curve_csv(is);
  REQUIRE(back.size() == pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(back[i].algo == pts[i].algo);
    CHECK(back[i].step == pts[i].step);
    CHECK(back[i].mean == pts[i].mean);
    CHECK(back[i].min == pts[i].min);
    CHECK(back[i].max == pts[i].max);
  }
}

TEST_CASE("load_runs aggregates run directories") {
  const std::string dir = "/tmp/cgar_sweep_test";
  std::filesystem::remove_all(dir);
  for (int s = 0; s < 2; ++s) {
    TrainConfig cfg = small_config();
    cfg.seed = s;
    run_training(cfg, dir + "/sac_pendulum_seed" + std::to_string(s));
  }
  auto recs = load_runs(dir);
  REQUIRE(recs.size() == 2);
  auto rows = summarize(recs);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].seeds == 2);
}
