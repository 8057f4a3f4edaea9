#pragma once

#include <Eigen/Core>

#include <optional>

namespace rqf {

class Rng;

// Surrogate dynamics constants. Chosen so full cooperation earns a strongly
// positive reward, zero support flips immediately, and a three-legged gait
// can still progress. Every value is overridable from the run config.
struct EnvParams {
  double drive_gain = 0.05;        // meters of travel per unit engaged thrust
  double dt = 0.1;                 // seconds between actions
  double ctrl_cost_weight = 0.005;
  double support_threshold = 0.2;  // flip when total engagement drops below
  double imbalance_limit = 1.5;    // flip when |left/right engagement gap| exceeds
  double stable_bonus = 0.01;      // per-step reward while upright
  double flip_penalty = -100.0;
  double reset_noise = 0.01;       // half-width of displacement-entry noise at reset
  int max_steps = 100;
};

struct MalfunctionSpec {
  long episode = 0;  // first episode the freeze is active
  int agent = 0;     // effective action forced to (0, 0)
};

struct StepResult {
  Eigen::MatrixXd obs;  // obs_dim x n_agents
  double reward = 0.0;
  bool done = false;
  // info
  double dx = 0.0;
  double dy = 0.0;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  bool flipped = false;
};

// Planar four-legged walker. Each leg is an agent with a two-part action
// (thrust, engagement): a leg contributes thrust only while its engagement
// is positive, legs 0,1 sit on the left side and 2,3 on the right, and the
// body flips when support or lateral balance is lost.
//
// Per-agent observation (obs_dim = 6):
//   [prev dx, prev dy, own prev commanded action (2), prev support, side sign]
class PlanarAntEnv {
 public:
  static constexpr int kNumAgents = 4;
  static constexpr int kActionDim = 2;
  static constexpr int kObsDim = 6;

  explicit PlanarAntEnv(EnvParams params = {});

  // Start position (0,0), zero previous action and support; the two
  // displacement observation entries get uniform(-reset_noise, +reset_noise)
  // perturbations drawn agent by agent.
  Eigen::MatrixXd reset(Rng& rng);

  // joint_action is kActionDim x kNumAgents, clamped to [-1, 1] on entry.
  // Throws std::logic_error once the episode is over.
  StepResult step(const Eigen::Ref<const Eigen::MatrixXd>& joint_action);

  // Freeze toggles take effect at the next step; the trainer only switches
  // them between episodes.
  void set_frozen_agent(std::optional<int> agent);
  std::optional<int> frozen_agent() const { return frozen_agent_; }

  const EnvParams& params() const { return params_; }
  const Eigen::Vector2d& position() const { return position_; }
  int step_index() const { return step_index_; }
  bool done() const { return done_; }
  bool flipped() const { return flipped_; }

  // +1 for left legs (0, 1), -1 for right legs (2, 3)
  static double side_sign(int agent) { return agent < 2 ? 1.0 : -1.0; }

 private:
  EnvParams params_;
  Eigen::Vector2d position_ = Eigen::Vector2d::Zero();
  Eigen::MatrixXd prev_action_;  // commanded, clamped
  double prev_support_ = 0.0;
  double prev_dx_ = 0.0;
  double prev_dy_ = 0.0;
  int step_index_ = 0;
  bool done_ = true;  // requires reset before first step
  bool flipped_ = false;
  std::optional<int> frozen_agent_;

  Eigen::MatrixXd make_observations() const;
};

// True when the freeze is in force for the given (0-based) episode.
bool malfunction_active(const MalfunctionSpec& spec, long episode);

}  // namespace rqf
