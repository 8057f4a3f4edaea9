#pragma once

#include <Eigen/Core>

namespace rqf {

class Rng;

// One stored experience. Matrices hold one agent per column; actions are the
// commanded (pre-malfunction) values, already clamped to the action range.
struct Transition {
  Eigen::MatrixXd obs;       // obs_dim x n_agents
  Eigen::MatrixXd action;    // action_dim x n_agents
  double reward = 0.0;       // scalar team reward
  Eigen::MatrixXd next_obs;  // obs_dim x n_agents
  bool done = false;
};

// Uniform minibatch, one sample per column. Per-agent slices are row blocks:
// agent i's observation occupies rows [i*obs_dim, (i+1)*obs_dim).
struct Batch {
  Eigen::MatrixXd obs;       // (n_agents*obs_dim) x b
  Eigen::MatrixXd actions;   // (n_agents*action_dim) x b
  Eigen::VectorXd rewards;   // b
  Eigen::MatrixXd next_obs;  // (n_agents*obs_dim) x b
  Eigen::VectorXd done;      // b, 0.0 or 1.0

  Eigen::Index size() const { return rewards.size(); }
};

// Fixed-capacity FIFO experience memory with uniform sampling (with
// replacement). Single-writer; not thread-safe.
class ReplayBuffer {
 public:
  ReplayBuffer(long capacity, int n_agents, int obs_dim, int action_dim);

  // Appends; once full, overwrites the oldest entry.
  void push(const Transition& t);

  // b uniform draws with replacement; throws std::runtime_error when
  // size() < b. Leaves the buffer unchanged.
  Batch sample(int b, Rng& rng) const;

  long size() const { return size_; }
  long capacity() const { return capacity_; }
  int n_agents() const { return n_agents_; }
  int obs_dim() const { return obs_dim_; }
  int action_dim() const { return action_dim_; }

  // FIFO position: 0 is the oldest stored transition.
  Transition at(long fifo_index) const;

 private:
  long capacity_;
  int n_agents_, obs_dim_, action_dim_;
  long size_ = 0;
  long next_ = 0;  // ring write position
  Eigen::MatrixXd obs_, actions_, next_obs_;  // column per slot
  Eigen::VectorXd rewards_;
  Eigen::VectorXd done_;
};

}  // namespace rqf
