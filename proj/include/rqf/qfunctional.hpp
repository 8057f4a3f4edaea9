#pragma once

#include <Eigen/Core>

#include "rqf/basis.hpp"
#include "rqf/funcnet.hpp"

namespace rqf {

class Rng;

struct ExplorationConfig {
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  long epsilon_decay_steps = 0;  // 0 means fully decayed from step 0
  double gaussian_std = 0.1;
  double action_low = -1.0;
  double action_high = 1.0;
  int candidates_m = 128;
};

// Throws std::invalid_argument on the first violated invariant.
void validate(const ExplorationConfig& cfg);

// Linear schedule from epsilon_start to epsilon_end over
// epsilon_decay_steps, constant afterwards.
double epsilon_at(const ExplorationConfig& cfg, long global_step);

// Q values of m candidate actions as one matrix product:
// Q = coeffs^T * feature_matrix(spec, actions). actions is action_dim x m.
Eigen::VectorXd evaluate_actions(const Eigen::Ref<const Eigen::VectorXd>& coeffs,
                                 const BasisSpec& spec,
                                 const Eigen::Ref<const Eigen::MatrixXd>& actions);

struct BestAction {
  Eigen::VectorXd action;
  double q_value = 0.0;
};

// Draws m iid uniform candidates over [low, high]^d (candidate by candidate,
// component by component), evaluates them under the coefficients
// forward(net, state) produces, and returns the argmax. Ties resolve to the
// lowest candidate index.
BestAction best_action(const NetworkParams& net, const BasisSpec& spec,
                       const Eigen::Ref<const Eigen::VectorXd>& state, int m,
                       double low, double high, Rng& rng);

// Epsilon-greedy over best_action with additive Gaussian noise, clamped to
// the action range. Draw order: one uniform for the epsilon coin, then
// either d uniforms (random action) or the best_action draws followed by d
// normals (greedy branch).
Eigen::VectorXd explore_action(const NetworkParams& net, const BasisSpec& spec,
                               const Eigen::Ref<const Eigen::VectorXd>& state,
                               const ExplorationConfig& cfg, long global_step,
                               Rng& rng);

}  // namespace rqf
