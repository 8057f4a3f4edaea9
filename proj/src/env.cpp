#include "rqf/env.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rqf/rng.hpp"

namespace rqf {

PlanarAntEnv::PlanarAntEnv(EnvParams params) : params_(params) {
  if (params_.max_steps < 1) {
    throw std::invalid_argument("env: max_steps must be >= 1, got " +
                                std::to_string(params_.max_steps));
  }
  if (params_.dt <= 0.0) {
    throw std::invalid_argument("env: dt must be positive");
  }
  prev_action_ = Eigen::MatrixXd::Zero(kActionDim, kNumAgents);
}

Eigen::MatrixXd PlanarAntEnv::reset(Rng& rng) {
  position_.setZero();
  prev_action_.setZero();
  prev_support_ = 0.0;
  prev_dx_ = 0.0;
  prev_dy_ = 0.0;
  step_index_ = 0;
  done_ = false;
  flipped_ = false;

  Eigen::MatrixXd obs = make_observations();
  // Noise only on the displacement entries, drawn agent by agent so the
  // stream layout is independent of any later observation changes.
  for (int i = 0; i < kNumAgents; ++i) {
    obs(0, i) += rng.uniform(-params_.reset_noise, params_.reset_noise);
    obs(1, i) += rng.uniform(-params_.reset_noise, params_.reset_noise);
  }
  return obs;
}

StepResult PlanarAntEnv::step(const Eigen::Ref<const Eigen::MatrixXd>& joint_action) {
  if (done_) {
    throw std::logic_error("env: step() after episode end; call reset()");
  }
  if (joint_action.rows() != kActionDim || joint_action.cols() != kNumAgents) {
    std::ostringstream msg;
    msg << "env: joint_action must be " << kActionDim << "x" << kNumAgents
        << ", got " << joint_action.rows() << "x" << joint_action.cols();
    throw std::invalid_argument(msg.str());
  }

  // Commanded actions are remembered (and observed) as clamped; the freeze
  // applies after that, so a frozen leg still reports what it was told.
  Eigen::MatrixXd commanded(kActionDim, kNumAgents);
  for (int i = 0; i < kNumAgents; ++i) {
    for (int d = 0; d < kActionDim; ++d) {
      commanded(d, i) = std::clamp(joint_action(d, i), -1.0, 1.0);
    }
  }
  Eigen::MatrixXd effective = commanded;
  if (frozen_agent_ && *frozen_agent_ >= 0 && *frozen_agent_ < kNumAgents) {
    effective.col(*frozen_agent_).setZero();
  }

  // Sequential agent-order sums keep the arithmetic reproducible in tests.
  double thrust_sum = 0.0;   // sum_i g_i * a_i1
  double lateral_sum = 0.0;  // sum_i sigma_i * g_i * a_i1
  double support = 0.0;      // sum_i g_i
  double imbalance = 0.0;    // sum_i sigma_i * g_i
  double ctrl_cost = 0.0;
  for (int i = 0; i < kNumAgents; ++i) {
    const double a1 = effective(0, i);
    const double a2 = effective(1, i);
    const double g = std::max(0.0, a2);
    const double sigma = side_sign(i);
    thrust_sum += g * a1;
    lateral_sum += sigma * g * a1;
    support += g;
    imbalance += sigma * g;
    ctrl_cost += a1 * a1 + a2 * a2;
  }
  const double dx = params_.drive_gain * thrust_sum;
  const double dy = params_.drive_gain * lateral_sum;
  const bool flipped = support < params_.support_threshold ||
                       std::abs(imbalance) > params_.imbalance_limit;

  double reward;
  if (flipped) {
    reward = params_.flip_penalty - params_.ctrl_cost_weight * ctrl_cost;
  } else {
    position_(0) += dx;
    position_(1) += dy;
    reward = params_.stable_bonus + dx / params_.dt -
             params_.ctrl_cost_weight * ctrl_cost;
  }

  prev_action_ = commanded;
  prev_support_ = flipped ? 0.0 : support;
  prev_dx_ = flipped ? 0.0 : dx;
  prev_dy_ = flipped ? 0.0 : dy;
  step_index_ += 1;
  flipped_ = flipped;
  done_ = flipped || step_index_ >= params_.max_steps;

  StepResult result;
  result.obs = make_observations();
  result.reward = reward;
  result.done = done_;
  result.dx = flipped ? 0.0 : dx;
  result.dy = flipped ? 0.0 : dy;
  result.position = position_;
  result.flipped = flipped;
  return result;
}

void PlanarAntEnv::set_frozen_agent(std::optional<int> agent) {
  if (agent && (*agent < 0 || *agent >= kNumAgents)) {
    throw std::out_of_range("env: frozen agent index " + std::to_string(*agent) +
                            " out of range [0, " + std::to_string(kNumAgents) + ")");
  }
  frozen_agent_ = agent;
}

Eigen::MatrixXd PlanarAntEnv::make_observations() const {
  Eigen::MatrixXd obs(kObsDim, kNumAgents);
  for (int i = 0; i < kNumAgents; ++i) {
    obs(0, i) = prev_dx_;
    obs(1, i) = prev_dy_;
    obs(2, i) = prev_action_(0, i);
    obs(3, i) = prev_action_(1, i);
    obs(4, i) = prev_support_;
    obs(5, i) = side_sign(i);
  }
  return obs;
}

bool malfunction_active(const MalfunctionSpec& spec, long episode) {
  return spec.episode >= 0 && episode >= spec.episode;
}

}  // namespace rqf
