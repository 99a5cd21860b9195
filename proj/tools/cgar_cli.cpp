// Command-line driver: train single runs, sweep seeds, aggregate results,
// and run the teacher-student demo.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cgar/distill.hpp"
#include "cgar/harness.hpp"

namespace {

std::string run_dir_name(const cgar::TrainConfig& cfg) {
  return cfg.algo + "_" + cfg.env + "_seed" + std::to_string(cfg.seed);
}

int do_train(const cgar::TrainConfig& cfg, const std::string& out) {
  const std::string dir = out + "/" + run_dir_name(cfg);
  std::printf("training %s on %s, seed %llu, K=%d -> %s\n", cfg.algo.c_str(),
              cfg.env.c_str(), static_cast<unsigned long long>(cfg.seed),
              cfg.k, dir.c_str());
  cgar::RunRecord rec = cgar::run_training(cfg, dir);
  if (rec.failed) {
    std::fprintf(stderr, "run failed at step %ld (numeric error)\n",
                 rec.failed_step);
    return 1;
  }
  if (!rec.evals.empty())
    std::printf("final eval mean return: %.2f\n",
                rec.evals.back().mean_return);
  return 0;
}

int do_summarize(const std::string& dir) {
  auto records = cgar::load_runs(dir);
  if (records.empty()) {
    std::fprintf(stderr, "no completed runs found under %s\n", dir.c_str());
    return 1;
  }
  auto rows = cgar::summarize(records);
  {
    std::ofstream os(dir + "/summary.csv");
    cgar::write_summary_csv(rows, os);
  }
  {
    std::ofstream os(dir + "/curve.csv");
    cgar::write_curve_csv(cgar::learning_curve_export(records), os);
  }
  cgar::write_summary_csv(rows, std::cout);
  std::printf("wrote %s/summary.csv and %s/curve.csv\n", dir.c_str(),
              dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CGAR-SAC training harness"};
  app.require_subcommand(1);

  cgar::TrainConfig cfg;
  std::string out = "runs";
  int sweep_seeds = 5;
  std::string sweep_algos = "sac,cgar-sac";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--algo", cfg.algo, "sac | cgar-sac")
        ->check(CLI::IsMember({"sac", "cgar-sac"}));
    sub->add_option("--env", cfg.env, "pendulum | pointmass")
        ->check(CLI::IsMember({"pendulum", "pointmass"}));
    sub->add_option("--k", cfg.k, "CGAR candidate count");
    sub->add_option("--steps", cfg.n_train, "training steps");
    sub->add_option("--init-steps", cfg.n_init, "random warmup steps");
    sub->add_option("--eval-interval", cfg.eval_interval, "steps between evals");
    sub->add_option("--eval-episodes", cfg.eval_episodes, "episodes per eval");
    sub->add_option("--temperature", cfg.softmax_temperature,
                    "softmax temperature for redistribution");
    sub->add_option("--batch-size", cfg.batch_size, "minibatch size");
    sub->add_option("--score-mode", cfg.score_mode, "min | critic1")
        ->check(CLI::IsMember({"min", "critic1"}));
    sub->add_flag("--verbose-candidates", cfg.verbose_candidates,
                  "log CGAR candidate records");
    sub->add_option("--out", out, "output directory");
  };

  auto* train = app.add_subcommand("train", "run one training job");
  add_common(train);
  train->add_option("--seed", cfg.seed, "RNG seed");

  auto* sweep = app.add_subcommand("sweep", "run seeds 0..N-1 per algorithm");
  add_common(sweep);
  sweep->add_option("--seeds", sweep_seeds, "number of seeds");
  sweep->add_option("--algos", sweep_algos, "comma-separated algorithms");

  auto* summarize = app.add_subcommand("summarize", "aggregate a run directory");
  std::string summarize_dir;
  summarize->add_option("dir", summarize_dir, "directory of runs")->required();

  auto* distill = app.add_subcommand("distill", "teacher-student demo");
  std::string variant = "ce";
  int distill_seeds = 5;
  int distill_epochs = 30;
  std::string distill_out = "distill_out";
  distill->add_option("--variant", variant, "ce | mse")
      ->check(CLI::IsMember({"ce", "mse"}));
  distill->add_option("--seeds", distill_seeds, "number of seeds");
  distill->add_option("--epochs", distill_epochs, "training epochs");
  distill->add_option("--out", distill_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return do_train(cfg, out);

    if (sweep->parsed()) {
      std::vector<std::string> algos;
      std::stringstream ss(sweep_algos);
      for (std::string a; std::getline(ss, a, ',');) algos.push_back(a);
      for (const auto& algo : algos) {
        for (int s = 0; s < sweep_seeds; ++s) {
          cgar::TrainConfig c = cfg;
          c.algo = algo;
          c.seed = static_cast<std::uint64_t>(s);
          if (do_train(c, out) != 0) return 1;
        }
      }
      return do_summarize(out);
    }

    if (summarize->parsed()) return do_summarize(summarize_dir);

    if (distill->parsed()) {
      std::filesystem::create_directories(distill_out);
      const std::string path = distill_out + "/distill_" + variant + ".csv";
      std::ofstream os(path);
      os << "seed,epoch,variant,acc_m1,acc_m2\n";
      cgar::DemoDataset data = cgar::generate_dataset(250, 4, 0.5, 12345);
      for (int s = 0; s < distill_seeds; ++s) {
        cgar::DistillResult r =
            cgar::train_pair(data, distill_epochs, static_cast<std::uint64_t>(s),
                             variant);
        for (std::size_t e = 0; e < r.acc_m1.size(); ++e)
          os << s << ',' << e << ',' << variant << ',' << r.acc_m1[e] << ','
             << r.acc_m2[e] << '\n';
      }
      std::printf("wrote %s\n", path.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
