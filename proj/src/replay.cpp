#include "rqf/replay.hpp"

#include "rqf/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace rqf {

namespace {

Eigen::VectorXd flatten(const Eigen::MatrixXd& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

}  // namespace

ReplayBuffer::ReplayBuffer(long capacity, int n_agents, int obs_dim,
                           int action_dim)
    : capacity_(capacity),
      n_agents_(n_agents),
      obs_dim_(obs_dim),
      action_dim_(action_dim) {
  if (capacity < 1) throw std::invalid_argument("replay: capacity must be >= 1");
  if (n_agents < 1 || obs_dim < 1 || action_dim < 1) {
    throw std::invalid_argument("replay: dims must be >= 1");
  }
  obs_.resize(static_cast<long>(n_agents) * obs_dim, capacity);
  actions_.resize(static_cast<long>(n_agents) * action_dim, capacity);
  next_obs_.resize(static_cast<long>(n_agents) * obs_dim, capacity);
  rewards_.resize(capacity);
  done_.resize(capacity);
}

void ReplayBuffer::push(const Transition& t) {
  if (t.obs.rows() != obs_dim_ || t.obs.cols() != n_agents_ ||
      t.next_obs.rows() != obs_dim_ || t.next_obs.cols() != n_agents_) {
    throw std::invalid_argument("replay: observation shape mismatch");
  }
  if (t.action.rows() != action_dim_ || t.action.cols() != n_agents_) {
    throw std::invalid_argument("replay: action shape mismatch");
  }
  if (!std::isfinite(t.reward)) {
    throw std::invalid_argument("replay: reward must be finite");
  }
  // column-major flatten puts agent 0's block first
  obs_.col(next_) = flatten(t.obs);
  actions_.col(next_) = flatten(t.action);
  next_obs_.col(next_) = flatten(t.next_obs);
  rewards_[next_] = t.reward;
  done_[next_] = t.done ? 1.0 : 0.0;
  next_ = (next_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
}

Batch ReplayBuffer::sample(int b, Rng& rng) const {
  if (b < 1) throw std::invalid_argument("replay: batch size must be >= 1");
  if (size_ < b) {
    throw std::runtime_error("replay: requested batch of " + std::to_string(b) +
                             " but only " + std::to_string(size_) +
                             " transitions stored");
  }
  Batch batch;
  batch.obs.resize(obs_.rows(), b);
  batch.actions.resize(actions_.rows(), b);
  batch.next_obs.resize(next_obs_.rows(), b);
  batch.rewards.resize(b);
  batch.done.resize(b);
  for (int k = 0; k < b; ++k) {
    const auto slot = static_cast<long>(
        rng.uniform_index(static_cast<std::uint64_t>(size_)));
    const long col = (size_ < capacity_) ? slot : (next_ + slot) % capacity_;
    batch.obs.col(k) = obs_.col(col);
    batch.actions.col(k) = actions_.col(col);
    batch.next_obs.col(k) = next_obs_.col(col);
    batch.rewards[k] = rewards_[col];
    batch.done[k] = done_[col];
  }
  return batch;
}

Transition ReplayBuffer::at(long fifo_index) const {
  if (fifo_index < 0 || fifo_index >= size_) {
    throw std::out_of_range("replay: index out of range");
  }
  const long col =
      (size_ < capacity_) ? fifo_index : (next_ + fifo_index) % capacity_;
  Transition t;
  t.obs = Eigen::Map<const Eigen::MatrixXd>(obs_.col(col).data(), obs_dim_,
                                            n_agents_);
  t.action = Eigen::Map<const Eigen::MatrixXd>(actions_.col(col).data(),
                                               action_dim_, n_agents_);
  t.next_obs = Eigen::Map<const Eigen::MatrixXd>(next_obs_.col(col).data(),
                                                 obs_dim_, n_agents_);
  t.reward = rewards_[col];
  t.done = done_[col] != 0.0;
  return t;
}

}  // namespace rqf
