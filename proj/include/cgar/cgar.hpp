#pragma once

#include <utility>

#include <Eigen/Dense>

#include "cgar/distributions.hpp"
#include "cgar/nn.hpp"
#include "cgar/rng.hpp"
#include "cgar/sac.hpp"

namespace cgar {

// The K policy samples, their critic scores, and the redistributed
// categorical the action was drawn from. Kept around for logging.
struct ActionCandidates {
  Eigen::MatrixXd actions;    // action_dim x K
  Eigen::MatrixXd presquash;  // action_dim x K
  Eigen::VectorXd q_scores;   // K
  DiscreteDistribution probs;
  int chosen_index = 0;
};

// K independent reparameterized draws, one noise vector per candidate, drawn
// in candidate order.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> sample_action_set(
    const PolicyDistribution& dist, int k, Rng& rng) {
  if (k < 1) throw ContractViolation("sample_action_set: K must be >= 1");
  const int d = dist.dims();
  Eigen::MatrixXd actions(d, k), presquash(d, k);
  for (int i = 0; i < k; ++i) {
    auto [a, u] = sample_squashed(dist, rng.normal_vec(d));
    actions.col(i) = a;
    presquash.col(i) = u;
  }
  return {std::move(actions), std::move(presquash)};
}

// Q score per candidate. "min" uses the min of the twin online critics (the
// value estimate SAC itself trusts); "critic1" is the single-critic ablation.
inline Eigen::VectorXd score_actions(const AgentState& agent,
                                     const Eigen::VectorXd& state,
                                     const Eigen::MatrixXd& actions,
                                     const std::string& score_mode = "min") {
  if (actions.cols() == 0) throw ContractViolation("score_actions: no actions");
  const int k = static_cast<int>(actions.cols());
  Eigen::MatrixXd sa(state.size() + actions.rows(), k);
  for (int i = 0; i < k; ++i) {
    sa.col(i).head(state.size()) = state;
    sa.col(i).tail(actions.rows()) = actions.col(i);
  }
  Eigen::VectorXd q1 = mlp_forward_batch(agent.critic1, sa).transpose();
  if (score_mode == "critic1") return q1;
  Eigen::VectorXd q2 = mlp_forward_batch(agent.critic2, sa).transpose();
  return q1.cwiseMin(q2);
}

// Softmax over Q scores; temperature 1 is the plain softmax redistribution.
inline DiscreteDistribution redistribute(const Eigen::VectorXd& q_scores,
                                         double temperature = 1.0) {
  if (temperature <= 0.0)
    throw ContractViolation("redistribute: temperature must be positive");
  return softmax(q_scores / temperature);
}

// Full selection pipeline: sample K candidates, score with the critic,
// softmax-redistribute, draw. K=1 skips the categorical draw so the RNG
// stream is identical to the plain single-sample path.
inline std::pair<Eigen::VectorXd, ActionCandidates> cgar_select(
    const AgentState& agent, const PolicyDistribution& dist,
    const Eigen::VectorXd& state, int k, double temperature, Rng& rng,
    const std::string& score_mode = "min") {
  ActionCandidates c;
  std::tie(c.actions, c.presquash) = sample_action_set(dist, k, rng);
  c.q_scores = score_actions(agent, state, c.actions, score_mode);
  c.probs = redistribute(c.q_scores, temperature);
  c.chosen_index = (k == 1) ? 0 : sample_categorical(c.probs, rng);
  Eigen::VectorXd action = c.actions.col(c.chosen_index);
  return {std::move(action), std::move(c)};
}

}  // namespace cgar
