#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cgar/distributions.hpp"
#include "cgar/nn.hpp"
#include "cgar/replay.hpp"
#include "cgar/rng.hpp"

namespace cgar {

struct TrainConfig {
  double gamma = 0.99;
  double tau = 0.005;
  double lr_critic = 3e-4;
  double lr_actor = 3e-4;
  double lr_alpha = 3e-4;
  int k = 10;                       // CGAR candidate count
  int n_init = 1000;                // random-action warmup steps
  int n_train = 30000;
  int batch_size = 256;
  double target_entropy = 0.0;      // resolved to -action_dim when auto
  bool target_entropy_auto = true;
  int eval_interval = 1000;
  int eval_episodes = 10;
  std::uint64_t seed = 0;
  double softmax_temperature = 1.0;
  std::string algo = "sac";         // "sac" | "cgar-sac"
  std::string env = "pendulum";
  std::vector<int> hidden_sizes = {64, 64};
  int buffer_capacity = 100000;
  std::string score_mode = "min";   // "min" | "critic1"
  bool verbose_candidates = false;
};

struct StepMetrics {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double alpha_loss = 0.0;
  double alpha = 0.0;
  double mean_q = 0.0;
};

// Minibatch in column-major layout: one transition per column.
struct Batch {
  Eigen::MatrixXd states;
  Eigen::MatrixXd actions;
  Eigen::VectorXd rewards;
  Eigen::MatrixXd next_states;
  Eigen::VectorXd done;  // 0/1
  int size = 0;
};

inline Batch make_batch(const std::vector<Transition>& ts) {
  if (ts.empty()) throw ContractViolation("make_batch: empty batch");
  const int B = static_cast<int>(ts.size());
  const int sd = static_cast<int>(ts[0].state.size());
  const int ad = static_cast<int>(ts[0].action.size());
  Batch b;
  b.size = B;
  b.states.resize(sd, B);
  b.actions.resize(ad, B);
  b.next_states.resize(sd, B);
  b.rewards.resize(B);
  b.done.resize(B);
  for (int j = 0; j < B; ++j) {
    b.states.col(j) = ts[j].state;
    b.actions.col(j) = ts[j].action;
    b.next_states.col(j) = ts[j].next_state;
    b.rewards[j] = ts[j].reward;
    b.done[j] = ts[j].done ? 1.0 : 0.0;
  }
  return b;
}

// SAC learner state: squashed-Gaussian actor (outputs mean || raw log_std),
// twin critics with Polyak-averaged targets, learned temperature
// alpha = exp(log_alpha).
struct AgentState {
  MlpParams actor, critic1, critic2, target1, target2;
  double log_alpha = 0.0;
  AdamState opt_actor, opt_critic1, opt_critic2;
  ScalarAdam opt_alpha;
  int state_dim = 0;
  int action_dim = 0;

  double alpha() const { return std::exp(log_alpha); }

  static AgentState init(int state_dim, int action_dim,
                         const std::vector<int>& hidden, Rng& rng) {
    AgentState a;
    a.state_dim = state_dim;
    a.action_dim = action_dim;
    std::vector<int> actor_sizes{state_dim};
    actor_sizes.insert(actor_sizes.end(), hidden.begin(), hidden.end());
    actor_sizes.push_back(2 * action_dim);
    std::vector<int> critic_sizes{state_dim + action_dim};
    critic_sizes.insert(critic_sizes.end(), hidden.begin(), hidden.end());
    critic_sizes.push_back(1);
    a.actor = MlpParams::random_init(actor_sizes, Activation::relu, rng);
    a.critic1 = MlpParams::random_init(critic_sizes, Activation::relu, rng);
    a.critic2 = MlpParams::random_init(critic_sizes, Activation::relu, rng);
    a.target1 = a.critic1;
    a.target2 = a.critic2;
    a.opt_actor = AdamState::zeros_like(a.actor);
    a.opt_critic1 = AdamState::zeros_like(a.critic1);
    a.opt_critic2 = AdamState::zeros_like(a.critic2);
    return a;
  }

  PolicyDistribution policy(const Eigen::VectorXd& state) const {
    Eigen::VectorXd o = mlp_forward(actor, state);
    return make_policy(o.head(action_dim), o.tail(action_dim));
  }
};

namespace detail {

inline Eigen::MatrixXd concat_rows(const Eigen::MatrixXd& a,
                                   const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() + b.rows(), a.cols());
  out.topRows(a.rows()) = a;
  out.bottomRows(b.rows()) = b;
  return out;
}

// Batched squashed-Gaussian machinery shared by the loss functions.
struct PolicyBatch {
  Eigen::MatrixXd mean, log_std_raw, log_std, std, presquash, actions;
  Eigen::VectorXd log_probs;
};

inline PolicyBatch policy_sample_batch(const AgentState& agent,
                                       const Eigen::MatrixXd& states,
                                       const Eigen::MatrixXd& noise) {
  const int d = agent.action_dim;
  PolicyBatch pb;
  Eigen::MatrixXd o = mlp_forward_batch(agent.actor, states);
  pb.mean = o.topRows(d);
  pb.log_std_raw = o.bottomRows(d);
  pb.log_std = pb.log_std_raw.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  pb.std = pb.log_std.array().exp();
  pb.presquash = pb.mean + pb.std.cwiseProduct(noise);
  pb.actions = pb.presquash.array().tanh();
  pb.log_probs.resize(states.cols());
  for (Eigen::Index j = 0; j < states.cols(); ++j) {
    double lp = 0.0;
    for (int i = 0; i < d; ++i) {
      const double z = noise(i, j);
      lp += -0.5 * std::log(2.0 * M_PI) - pb.log_std(i, j) - 0.5 * z * z;
      lp -= log_one_minus_tanh_sq(pb.presquash(i, j));
    }
    pb.log_probs[j] = lp;
  }
  return pb;
}

inline Eigen::VectorXd critic_forward_row(const MlpParams& critic,
                                          const Eigen::MatrixXd& sa) {
  return mlp_forward_batch(critic, sa).transpose();
}

}  // namespace detail

inline double q_min(const AgentState& agent, const Eigen::VectorXd& state,
                    const Eigen::VectorXd& action) {
  Eigen::VectorXd sa(state.size() + action.size());
  sa << state, action;
  return std::min(mlp_forward(agent.critic1, sa)[0],
                  mlp_forward(agent.critic2, sa)[0]);
}

// Single-sample soft value estimate at the bootstrap state, using the TARGET
// critics: min Q_targ(s', a') - alpha * log pi(a'|s') with a' drawn from the
// current actor.
inline double value_target(const AgentState& agent,
                           const Eigen::VectorXd& next_state, Rng& rng) {
  PolicyDistribution dist = agent.policy(next_state);
  auto [a2, u2] = sample_squashed(dist, rng.normal_vec(agent.action_dim));
  Eigen::VectorXd sa(next_state.size() + a2.size());
  sa << next_state, a2;
  const double q = std::min(mlp_forward(agent.target1, sa)[0],
                            mlp_forward(agent.target2, sa)[0]);
  return q - agent.alpha() * log_prob_squashed(dist, u2);
}

struct CriticLossResult {
  double loss = 0.0;
  GradBuffer grad1, grad2;
};

// J_Q: mean over the batch of 0.5 (Q_i(s,a) - y)^2 summed over both critics,
// y = r + gamma (1-done) * value_target(s'). Targets carry no gradient.
inline CriticLossResult critic_loss(const AgentState& agent, const Batch& batch,
                                    Rng& rng, double gamma) {
  const int B = batch.size;
  const int d = agent.action_dim;

  // bootstrap targets from the target critics (no gradient)
  Eigen::MatrixXd noise = rng.normal_mat(d, B);
  detail::PolicyBatch pb =
      detail::policy_sample_batch(agent, batch.next_states, noise);
  Eigen::MatrixXd sa2 = detail::concat_rows(batch.next_states, pb.actions);
  Eigen::VectorXd qt = detail::critic_forward_row(agent.target1, sa2)
                           .cwiseMin(detail::critic_forward_row(agent.target2, sa2));
  Eigen::VectorXd y =
      batch.rewards.array() +
      gamma * (1.0 - batch.done.array()) *
          (qt.array() - agent.alpha() * pb.log_probs.array());

  Eigen::MatrixXd sa = detail::concat_rows(batch.states, batch.actions);
  CriticLossResult out;
  out.grad1 = GradBuffer::zeros_like(agent.critic1);
  out.grad2 = GradBuffer::zeros_like(agent.critic2);

  Eigen::VectorXd q1 = detail::critic_forward_row(agent.critic1, sa);
  Eigen::VectorXd q2 = detail::critic_forward_row(agent.critic2, sa);
  Eigen::VectorXd r1 = q1 - y;
  Eigen::VectorXd r2 = q2 - y;
  out.loss = (0.5 * (r1.array().square() + r2.array().square())).mean();
  mlp_backward_batch(agent.critic1, sa, (r1 / B).transpose(), &out.grad1);
  mlp_backward_batch(agent.critic2, sa, (r2 / B).transpose(), &out.grad2);
  if (!std::isfinite(out.loss)) throw NumericError("critic_loss: non-finite");
  return out;
}

struct ActorLossResult {
  double loss = 0.0;
  GradBuffer grad;
  double mean_q = 0.0;      // mean min-Q at the resampled actions
  double mean_log_prob = 0.0;
};

// J_pi: mean of alpha log pi(a~|s) - min Q(s, a~) with a~ reparameterized.
// Gradients flow through the sample into the actor only; critics are frozen.
inline ActorLossResult actor_loss(const AgentState& agent, const Batch& batch,
                                  Rng& rng) {
  const int B = batch.size;
  const int d = agent.action_dim;
  const double alpha = agent.alpha();

  Eigen::MatrixXd noise = rng.normal_mat(d, B);
  detail::PolicyBatch pb = detail::policy_sample_batch(agent, batch.states, noise);
  Eigen::MatrixXd sa = detail::concat_rows(batch.states, pb.actions);

  Eigen::VectorXd q1 = detail::critic_forward_row(agent.critic1, sa);
  Eigen::VectorXd q2 = detail::critic_forward_row(agent.critic2, sa);
  Eigen::VectorXd qmin = q1.cwiseMin(q2);

  ActorLossResult out;
  out.loss = (alpha * pb.log_probs.array() - qmin.array()).mean();
  out.mean_q = qmin.mean();
  out.mean_log_prob = pb.log_probs.mean();
  if (!std::isfinite(out.loss)) throw NumericError("actor_loss: non-finite");

  // dQmin/da via the argmin critic (input gradients only; critic grads dropped)
  Eigen::MatrixXd up1 = Eigen::MatrixXd::Zero(1, B);
  Eigen::MatrixXd up2 = Eigen::MatrixXd::Zero(1, B);
  for (int j = 0; j < B; ++j) (q1[j] <= q2[j] ? up1 : up2)(0, j) = 1.0;
  GradBuffer scratch1 = GradBuffer::zeros_like(agent.critic1);
  GradBuffer scratch2 = GradBuffer::zeros_like(agent.critic2);
  Eigen::MatrixXd gin = mlp_backward_batch(agent.critic1, sa, up1, &scratch1) +
                        mlp_backward_batch(agent.critic2, sa, up2, &scratch2);
  Eigen::MatrixXd g_action = gin.bottomRows(d);

  // chain to actor outputs:
  //   dlogpi/du_i = 2 tanh(u_i); da_i/du_i = 1 - a_i^2
  //   du/dmean = 1; du/dlog_std = std * eps; dlogpi/dlog_std has the extra -1
  Eigen::MatrixXd dmean(d, B), dlogstd(d, B);
  for (int j = 0; j < B; ++j) {
    for (int i = 0; i < d; ++i) {
      const double a = pb.actions(i, j);
      const double se = pb.std(i, j) * noise(i, j);
      const double dlp_du = 2.0 * a;
      const double dq_du = g_action(i, j) * (1.0 - a * a);
      dmean(i, j) = (alpha * dlp_du - dq_du) / B;
      const bool clamped = pb.log_std_raw(i, j) < kLogStdMin ||
                           pb.log_std_raw(i, j) > kLogStdMax;
      dlogstd(i, j) =
          clamped ? 0.0
                  : (alpha * (-1.0 + dlp_du * se) - dq_du * se) / B;
    }
  }
  Eigen::MatrixXd upstream(2 * d, B);
  upstream.topRows(d) = dmean;
  upstream.bottomRows(d) = dlogstd;
  out.grad = GradBuffer::zeros_like(agent.actor);
  mlp_backward_batch(agent.actor, batch.states, upstream, &out.grad);
  return out;
}

struct AlphaLossResult {
  double loss = 0.0;
  double grad_log_alpha = 0.0;
};

// J_alpha: mean of -alpha (log pi(a~|s) + H), log pi treated as constant.
inline AlphaLossResult alpha_loss(const AgentState& agent, const Batch& batch,
                                  Rng& rng, double target_entropy) {
  Eigen::MatrixXd noise = rng.normal_mat(agent.action_dim, batch.size);
  detail::PolicyBatch pb = detail::policy_sample_batch(agent, batch.states, noise);
  const double mean_term = (pb.log_probs.array() + target_entropy).mean();
  const double alpha = agent.alpha();
  AlphaLossResult out;
  out.loss = -alpha * mean_term;
  out.grad_log_alpha = -alpha * mean_term;  // d/dlog_alpha, alpha = exp(log_alpha)
  return out;
}

// Elementwise convex blend of online critics into targets.
inline void polyak_update(AgentState& agent, double tau) {
  if (tau <= 0.0 || tau > 1.0) throw ContractViolation("polyak: tau out of (0,1]");
  for (int l = 0; l < agent.critic1.num_layers(); ++l) {
    agent.target1.weights[l] =
        tau * agent.critic1.weights[l] + (1.0 - tau) * agent.target1.weights[l];
    agent.target1.biases[l] =
        tau * agent.critic1.biases[l] + (1.0 - tau) * agent.target1.biases[l];
    agent.target2.weights[l] =
        tau * agent.critic2.weights[l] + (1.0 - tau) * agent.target2.weights[l];
    agent.target2.biases[l] =
        tau * agent.critic2.biases[l] + (1.0 - tau) * agent.target2.biases[l];
  }
}

// One critic -> actor -> alpha -> Polyak cycle. All gradients are computed
// and checked before any parameter is touched, so a numeric failure leaves
// the agent unmodified.
inline StepMetrics train_step(AgentState& agent, const ReplayBuffer& buffer,
                              const TrainConfig& cfg, Rng& rng) {
  if (buffer.size() < static_cast<std::size_t>(cfg.batch_size))
    throw ContractViolation("train_step: buffer smaller than batch");
  Batch batch = make_batch(buffer.sample_batch(cfg.batch_size, rng));

  const double H = cfg.target_entropy_auto
                       ? -static_cast<double>(agent.action_dim)
                       : cfg.target_entropy;

  CriticLossResult cl = critic_loss(agent, batch, rng, cfg.gamma);
  ActorLossResult al = actor_loss(agent, batch, rng);
  AlphaLossResult aal = alpha_loss(agent, batch, rng, H);
  if (!cl.grad1.finite() || !cl.grad2.finite() || !al.grad.finite() ||
      !std::isfinite(aal.grad_log_alpha))
    throw NumericError("train_step: non-finite gradients");

  adam_step(agent.critic1, cl.grad1, agent.opt_critic1, cfg.lr_critic);
  adam_step(agent.critic2, cl.grad2, agent.opt_critic2, cfg.lr_critic);
  adam_step(agent.actor, al.grad, agent.opt_actor, cfg.lr_actor);
  adam_step_scalar(agent.log_alpha, aal.grad_log_alpha, agent.opt_alpha,
                   cfg.lr_alpha);
  polyak_update(agent, cfg.tau);

  return {cl.loss, al.loss, aal.loss, agent.alpha(), al.mean_q};
}

// ---- checkpointing -------------------------------------------------------

namespace detail {

inline void write_mlp(std::ostream& os, const MlpParams& p) {
  os << p.layer_sizes.size();
  for (int s : p.layer_sizes) os << ' ' << s;
  os << ' ' << to_string(p.activation) << '\n';
  os << std::hexfloat;
  for (int l = 0; l < p.num_layers(); ++l) {
    for (Eigen::Index j = 0; j < p.weights[l].cols(); ++j)
      for (Eigen::Index i = 0; i < p.weights[l].rows(); ++i)
        os << p.weights[l](i, j) << ' ';
    for (Eigen::Index i = 0; i < p.biases[l].size(); ++i)
      os << p.biases[l][i] << ' ';
    os << '\n';
  }
  os << std::defaultfloat;
}

// istream operator>> does not accept hexfloat; parse tokens with strtod
inline double read_double(std::istream& is) {
  std::string tok;
  is >> tok;
  return std::strtod(tok.c_str(), nullptr);
}

inline MlpParams read_mlp(std::istream& is) {
  std::size_t n;
  is >> n;
  std::vector<int> sizes(n);
  for (auto& s : sizes) is >> s;
  std::string act;
  is >> act;
  MlpParams p = MlpParams::zeros(sizes, activation_from_string(act));
  for (int l = 0; l < p.num_layers(); ++l) {
    for (Eigen::Index j = 0; j < p.weights[l].cols(); ++j)
      for (Eigen::Index i = 0; i < p.weights[l].rows(); ++i)
        p.weights[l](i, j) = read_double(is);
    for (Eigen::Index i = 0; i < p.biases[l].size(); ++i)
      p.biases[l][i] = read_double(is);
  }
  return p;
}

}  // namespace detail

// Versioned text checkpoint; hexfloat serialization round-trips bit-exactly.
inline void save_checkpoint(const AgentState& agent, std::uint64_t config_hash,
                            const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write checkpoint: " + path);
  os << "cgarsac-checkpoint v1\n";
  os << "config_hash " << config_hash << '\n';
  os << agent.state_dim << ' ' << agent.action_dim << '\n';
  os << std::hexfloat << agent.log_alpha << std::defaultfloat << '\n';
  detail::write_mlp(os, agent.actor);
  detail::write_mlp(os, agent.critic1);
  detail::write_mlp(os, agent.critic2);
  detail::write_mlp(os, agent.target1);
  detail::write_mlp(os, agent.target2);
}

inline AgentState load_checkpoint(const std::string& path,
                                  std::uint64_t* config_hash = nullptr) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read checkpoint: " + path);
  std::string magic, version, key;
  is >> magic >> version;
  if (magic != "cgarsac-checkpoint" || version != "v1")
    throw std::runtime_error("bad checkpoint header: " + path);
  std::uint64_t hash;
  is >> key >> hash;
  if (config_hash) *config_hash = hash;
  AgentState a;
  is >> a.state_dim >> a.action_dim;
  a.log_alpha = detail::read_double(is);
  a.actor = detail::read_mlp(is);
  a.critic1 = detail::read_mlp(is);
  a.critic2 = detail::read_mlp(is);
  a.target1 = detail::read_mlp(is);
  a.target2 = detail::read_mlp(is);
  a.opt_actor = AdamState::zeros_like(a.actor);
  a.opt_critic1 = AdamState::zeros_like(a.critic1);
  a.opt_critic2 = AdamState::zeros_like(a.critic2);
  return a;
}

}  // namespace cgar
