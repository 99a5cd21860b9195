#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "cgar/cgar.hpp"
#include "cgar/envs.hpp"
#include "cgar/replay.hpp"
#include "cgar/sac.hpp"

namespace cgar {

struct EvalRow {
  long step = 0;
  double mean_return = 0.0;
  std::vector<double> ep_returns;
};

struct TrainRow {
  long step = 0;
  StepMetrics metrics;
};

struct RunRecord {
  TrainConfig config;
  std::vector<TrainRow> train_rows;
  std::vector<EvalRow> evals;
  bool failed = false;
  long failed_step = -1;
};

// ---- config (de)serialization -------------------------------------------

inline nlohmann::json config_to_json(const TrainConfig& c) {
  return {
      {"gamma", c.gamma},
      {"tau", c.tau},
      {"lr_critic", c.lr_critic},
      {"lr_actor", c.lr_actor},
      {"lr_alpha", c.lr_alpha},
      {"k", c.k},
      {"n_init", c.n_init},
      {"n_train", c.n_train},
      {"batch_size", c.batch_size},
      {"target_entropy", c.target_entropy},
      {"target_entropy_auto", c.target_entropy_auto},
      {"eval_interval", c.eval_interval},
      {"eval_episodes", c.eval_episodes},
      {"seed", c.seed},
      {"softmax_temperature", c.softmax_temperature},
      {"algo", c.algo},
      {"env", c.env},
      {"hidden_sizes", c.hidden_sizes},
      {"buffer_capacity", c.buffer_capacity},
      {"score_mode", c.score_mode},
      {"verbose_candidates", c.verbose_candidates},
  };
}

inline TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.gamma = j.at("gamma");
  c.tau = j.at("tau");
  c.lr_critic = j.at("lr_critic");
  c.lr_actor = j.at("lr_actor");
  c.lr_alpha = j.at("lr_alpha");
  c.k = j.at("k");
  c.n_init = j.at("n_init");
  c.n_train = j.at("n_train");
  c.batch_size = j.at("batch_size");
  c.target_entropy = j.at("target_entropy");
  c.target_entropy_auto = j.at("target_entropy_auto");
  c.eval_interval = j.at("eval_interval");
  c.eval_episodes = j.at("eval_episodes");
  c.seed = j.at("seed");
  c.softmax_temperature = j.at("softmax_temperature");
  c.algo = j.at("algo");
  c.env = j.at("env");
  c.hidden_sizes = j.at("hidden_sizes").get<std::vector<int>>();
  c.buffer_capacity = j.at("buffer_capacity");
  c.score_mode = j.at("score_mode");
  c.verbose_candidates = j.at("verbose_candidates");
  return c;
}

inline std::uint64_t config_hash(const TrainConfig& c) {
  return std::hash<std::string>{}(config_to_json(c).dump());
}

// ---- metrics CSV ---------------------------------------------------------

inline constexpr const char* kMetricsHeader =
    "step,event,mean_return,ep_returns,critic_loss,actor_loss,alpha_loss,"
    "alpha,mean_q";

namespace detail {

// %.17g round-trips doubles exactly
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string train_row_line(const TrainRow& r) {
  std::string s = std::to_string(r.step) + ",train,,,";
  s += fmt_double(r.metrics.critic_loss) + ",";
  s += fmt_double(r.metrics.actor_loss) + ",";
  s += fmt_double(r.metrics.alpha_loss) + ",";
  s += fmt_double(r.metrics.alpha) + ",";
  s += fmt_double(r.metrics.mean_q);
  return s;
}

inline std::string eval_row_line(const EvalRow& r) {
  std::string eps;
  for (std::size_t i = 0; i < r.ep_returns.size(); ++i) {
    if (i) eps += ';';
    eps += fmt_double(r.ep_returns[i]);
  }
  return std::to_string(r.step) + ",eval," + fmt_double(r.mean_return) + "," +
         eps + ",,,,,";
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

inline void write_metrics_csv(const RunRecord& rec, std::ostream& os) {
  os << kMetricsHeader << '\n';
  // merged in step order; eval rows follow the train row of the same step
  std::size_t e = 0;
  for (const auto& tr : rec.train_rows) {
    os << detail::train_row_line(tr) << '\n';
    while (e < rec.evals.size() && rec.evals[e].step <= tr.step)
      os << detail::eval_row_line(rec.evals[e++]) << '\n';
  }
  while (e < rec.evals.size()) os << detail::eval_row_line(rec.evals[e++]) << '\n';
}

inline std::string metrics_csv_string(const RunRecord& rec) {
  std::ostringstream os;
  write_metrics_csv(rec, os);
  return os.str();
}

// Reads eval and train rows back from a metrics CSV (config not included).
inline RunRecord read_metrics_csv(std::istream& is) {
  RunRecord rec;
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = detail::split(line, ',');
    if (f.size() < 9) continue;
    if (f[1] == "eval") {
      EvalRow r;
      r.step = std::stol(f[0]);
      r.mean_return = std::strtod(f[2].c_str(), nullptr);
      if (!f[3].empty())
        for (const auto& tok : detail::split(f[3], ';'))
          r.ep_returns.push_back(std::strtod(tok.c_str(), nullptr));
      rec.evals.push_back(std::move(r));
    } else if (f[1] == "train") {
      TrainRow r;
      r.step = std::stol(f[0]);
      r.metrics.critic_loss = std::strtod(f[4].c_str(), nullptr);
      r.metrics.actor_loss = std::strtod(f[5].c_str(), nullptr);
      r.metrics.alpha_loss = std::strtod(f[6].c_str(), nullptr);
      r.metrics.alpha = std::strtod(f[7].c_str(), nullptr);
      r.metrics.mean_q = std::strtod(f[8].c_str(), nullptr);
      rec.train_rows.push_back(std::move(r));
    }
  }
  return rec;
}

// ---- evaluation ----------------------------------------------------------

// Deterministic rollouts with the mean action tanh(mean); the agent and the
// replay buffer are never touched.
inline std::pair<double, std::vector<double>> evaluate(const AgentState& agent,
                                                       Env& env, int episodes,
                                                       Rng& rng) {
  if (episodes < 1) throw ContractViolation("evaluate: episodes must be >= 1");
  std::vector<double> returns;
  returns.reserve(episodes);
  for (int ep = 0; ep < episodes; ++ep) {
    Eigen::VectorXd state = env.reset(rng);
    double total = 0.0;
    bool done = false;
    while (!done) {
      PolicyDistribution dist = agent.policy(state);
      Eigen::VectorXd action = dist.mean.array().tanh();
      StepResult sr = env.step(action);
      total += sr.reward;
      state = sr.next_state;
      done = sr.done;
    }
    returns.push_back(total);
  }
  double mean = 0.0;
  for (double r : returns) mean += r;
  mean /= returns.size();
  return {mean, returns};
}

// ---- training loop -------------------------------------------------------

// Full training run. One RNG stream drives, in order: agent init, env resets,
// warmup random actions, per-step action noise (+ categorical draw when K>1),
// then batch indices and loss noise inside train_step. Evaluation uses its
// own fixed-seed stream so it cannot perturb training.
//
// When out_dir is non-empty the run writes metrics.csv (row-atomic appends),
// config.json, and checkpoint.txt there.
inline RunRecord run_training(const TrainConfig& cfg,
                              const std::string& out_dir = "") {
  RunRecord rec;
  rec.config = cfg;

  std::ofstream csv;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream cfg_os(out_dir + "/config.json");
    cfg_os << config_to_json(cfg).dump(2) << '\n';
    csv.open(out_dir + "/metrics.csv");
    csv << kMetricsHeader << '\n' << std::flush;
  }

  Rng rng(cfg.seed);
  Rng eval_rng(cfg.seed ^ 0x5eed5eedULL);
  auto env = make_env(cfg.env);
  auto eval_env = make_env(cfg.env);
  const int sd = env->spec().observation_dim;
  const int ad = env->spec().action_dim;

  AgentState agent = AgentState::init(sd, ad, cfg.hidden_sizes, rng);
  ReplayBuffer buffer(cfg.buffer_capacity);

  Eigen::VectorXd state = env->reset(rng);

  auto interact = [&](const Eigen::VectorXd& action) {
    StepResult sr = env->step(action);
    buffer.push({state, action, sr.reward, sr.next_state, sr.done});
    state = sr.done ? env->reset(rng) : sr.next_state;
  };

  for (int i = 0; i < cfg.n_init; ++i) {
    Eigen::VectorXd a(ad);
    for (int j = 0; j < ad; ++j) a[j] = rng.uniform(-1.0, 1.0);
    interact(a);
  }

  const bool use_cgar = cfg.algo == "cgar-sac";
  for (long step = 1; step <= cfg.n_train; ++step) {
    try {
      PolicyDistribution dist = agent.policy(state);
      Eigen::VectorXd action;
      if (use_cgar) {
        auto [a, cand] = cgar_select(agent, dist, state, cfg.k,
                                     cfg.softmax_temperature, rng,
                                     cfg.score_mode);
        action = std::move(a);
        if (cfg.verbose_candidates && !out_dir.empty()) {
          std::ofstream cand_os(out_dir + "/candidates.log", std::ios::app);
          cand_os << step << " k=" << cfg.k << " chosen=" << cand.chosen_index
                  << " q=" << cand.q_scores.transpose()
                  << " p=" << cand.probs.probs.transpose() << '\n';
        }
      } else {
        action = sample_squashed(dist, rng.normal_vec(ad)).first;
      }
      interact(action);

      TrainRow tr{step, train_step(agent, buffer, cfg, rng)};
      rec.train_rows.push_back(tr);
      if (csv.is_open())
        csv << detail::train_row_line(tr) << '\n' << std::flush;

      if (cfg.eval_interval > 0 && step % cfg.eval_interval == 0) {
        auto [mean, eps] =
            evaluate(agent, *eval_env, cfg.eval_episodes, eval_rng);
        EvalRow er{step, mean, std::move(eps)};
        rec.evals.push_back(er);
        if (csv.is_open())
          csv << detail::eval_row_line(er) << '\n' << std::flush;
      }
    } catch (const NumericError&) {
      rec.failed = true;
      rec.failed_step = step;
      break;
    }
  }

  if (!out_dir.empty())
    save_checkpoint(agent, config_hash(cfg), out_dir + "/checkpoint.txt");
  return rec;
}

// ---- aggregation ---------------------------------------------------------

struct SummaryRow {
  std::string algo, env;
  int seeds = 0;
  double mean_avg_return = 0.0;
  double std_avg_return = 0.0;  // population std over seeds
};

// Per run: average the eval mean-return column over all evaluations, then
// mean +- std over seeds per (algo, env).
inline std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records) {
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  std::map<std::pair<std::string, std::string>, std::vector<long>> schedules;
  for (const auto& rec : records) {
    if (rec.evals.empty())
      throw ContractViolation("summarize: run has no evaluations");
    auto key = std::make_pair(rec.config.algo, rec.config.env);
    std::vector<long> sched;
    double avg = 0.0;
    for (const auto& e : rec.evals) {
      avg += e.mean_return;
      sched.push_back(e.step);
    }
    avg /= rec.evals.size();
    auto it = schedules.find(key);
    if (it == schedules.end())
      schedules.emplace(key, sched);
    else if (it->second != sched)
      throw ContractViolation("summarize: mismatched evaluation schedules");
    groups[key].push_back(avg);
  }
  std::vector<SummaryRow> out;
  for (const auto& [key, vals] : groups) {
    SummaryRow row;
    row.algo = key.first;
    row.env = key.second;
    row.seeds = static_cast<int>(vals.size());
    for (double v : vals) row.mean_avg_return += v;
    row.mean_avg_return /= vals.size();
    double var = 0.0;
    for (double v : vals) var += (v - row.mean_avg_return) * (v - row.mean_avg_return);
    row.std_avg_return = std::sqrt(var / vals.size());
    out.push_back(row);
  }
  return out;
}

inline void write_summary_csv(const std::vector<SummaryRow>& rows,
                              std::ostream& os) {
  os << "algo,env,seeds,mean_avg_return,std_avg_return\n";
  for (const auto& r : rows)
    os << r.algo << ',' << r.env << ',' << r.seeds << ','
       << detail::fmt_double(r.mean_avg_return) << ','
       << detail::fmt_double(r.std_avg_return) << '\n';
}

struct CurvePoint {
  std::string algo, env;
  long step = 0;
  double mean = 0.0, min = 0.0, max = 0.0;
};

// One row per evaluation step per (algo, env): mean/min/max over seeds.
inline std::vector<CurvePoint> learning_curve_export(
    const std::vector<RunRecord>& records) {
  std::map<std::tuple<std::string, std::string, long>, std::vector<double>> by_step;
  for (const auto& rec : records)
    for (const auto& e : rec.evals)
      by_step[{rec.config.algo, rec.config.env, e.step}].push_back(e.mean_return);
  // all runs in a group must share the schedule
  std::map<std::pair<std::string, std::string>, std::size_t> counts;
  for (const auto& [key, vals] : by_step) {
    auto group = std::make_pair(std::get<0>(key), std::get<1>(key));
    auto it = counts.find(group);
    if (it == counts.end())
      counts.emplace(group, vals.size());
    else if (it->second != vals.size())
      throw ContractViolation("curve export: mismatched evaluation schedules");
  }
  std::vector<CurvePoint> out;
  for (const auto& [key, vals] : by_step) {
    CurvePoint p;
    p.algo = std::get<0>(key);
    p.env = std::get<1>(key);
    p.step = std::get<2>(key);
    p.min = p.max = vals[0];
    for (double v : vals) {
      p.mean += v;
      p.min = std::min(p.min, v);
      p.max = std::max(p.max, v);
    }
    p.mean /= vals.size();
    out.push_back(p);
  }
  return out;
}

inline void write_curve_csv(const std::vector<CurvePoint>& pts,
                            std::ostream& os) {
  os << "algo,env,step,mean_return,min_return,max_return\n";
  for (const auto& p : pts)
    os << p.algo << ',' << p.env << ',' << p.step << ','
       << detail::fmt_double(p.mean) << ',' << detail::fmt_double(p.min) << ','
       << detail::fmt_double(p.max) << '\n';
}

inline std::vector<CurvePoint> read_curve_csv(std::istream& is) {
  std::vector<CurvePoint> out;
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = detail::split(line, ',');
    CurvePoint p;
    p.algo = f[0];
    p.env = f[1];
    p.step = std::stol(f[2]);
    p.mean = std::strtod(f[3].c_str(), nullptr);
    p.min = std::strtod(f[4].c_str(), nullptr);
    p.max = std::strtod(f[5].c_str(), nullptr);
    out.push_back(p);
  }
  return out;
}

// Loads a completed run directory (config.json + metrics.csv).
inline RunRecord load_run(const std::string& dir) {
  std::ifstream cfg_is(dir + "/config.json");
  if (!cfg_is) throw std::runtime_error("missing config.json in " + dir);
  nlohmann::json j;
  cfg_is >> j;
  std::ifstream csv_is(dir + "/metrics.csv");
  if (!csv_is) throw std::runtime_error("missing metrics.csv in " + dir);
  RunRecord rec = read_metrics_csv(csv_is);
  rec.config = config_from_json(j);
  return rec;
}

// Scans out_dir for run subdirectories.
inline std::vector<RunRecord> load_runs(const std::string& dir) {
  std::vector<RunRecord> out;
  std::vector<std::string> subdirs;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_directory() &&
        std::filesystem::exists(e.path() / "metrics.csv"))
      subdirs.push_back(e.path().string());
  std::sort(subdirs.begin(), subdirs.end());
  for (const auto& s : subdirs) out.push_back(load_run(s));
  return out;
}

}  // namespace cgar
