#include "rqf/qfunctional.hpp"

#include "rqf/rng.hpp"

#include <algorithm>
#include <stdexcept>

namespace rqf {

void validate(const ExplorationConfig& cfg) {
  if (!(cfg.epsilon_end >= 0.0 && cfg.epsilon_start >= cfg.epsilon_end &&
        cfg.epsilon_start <= 1.0)) {
    throw std::invalid_argument(
        "exploration: need 0 <= epsilon_end <= epsilon_start <= 1");
  }
  if (cfg.epsilon_decay_steps < 0) {
    throw std::invalid_argument("exploration: epsilon_decay_steps must be >= 0");
  }
  if (cfg.gaussian_std < 0.0) {
    throw std::invalid_argument("exploration: gaussian_std must be >= 0");
  }
  if (!(cfg.action_low < cfg.action_high)) {
    throw std::invalid_argument("exploration: action_low must be < action_high");
  }
  if (cfg.candidates_m < 1) {
    throw std::invalid_argument("exploration: candidates_m must be >= 1");
  }
}

double epsilon_at(const ExplorationConfig& cfg, long global_step) {
  if (global_step >= cfg.epsilon_decay_steps) return cfg.epsilon_end;
  const double t =
      static_cast<double>(global_step) / static_cast<double>(cfg.epsilon_decay_steps);
  return cfg.epsilon_start + t * (cfg.epsilon_end - cfg.epsilon_start);
}

Eigen::VectorXd evaluate_actions(
    const Eigen::Ref<const Eigen::VectorXd>& coeffs, const BasisSpec& spec,
    const Eigen::Ref<const Eigen::MatrixXd>& actions) {
  if (coeffs.size() != spec.num_terms()) {
    throw std::invalid_argument("evaluate_actions: coefficient length " +
                                std::to_string(coeffs.size()) +
                                " does not match basis num_terms " +
                                std::to_string(spec.num_terms()));
  }
  return (coeffs.transpose() * feature_matrix(spec, actions)).transpose();
}

namespace {

Eigen::MatrixXd draw_candidates(int d, int m, double low, double high,
                                Rng& rng) {
  Eigen::MatrixXd candidates(d, m);
  for (int k = 0; k < m; ++k) {
    for (int j = 0; j < d; ++j) {
      candidates(j, k) = rng.uniform(low, high);
    }
  }
  return candidates;
}

}  // namespace

BestAction best_action(const NetworkParams& net, const BasisSpec& spec,
                       const Eigen::Ref<const Eigen::VectorXd>& state, int m,
                       double low, double high, Rng& rng) {
  if (m < 1) throw std::invalid_argument("best_action: m must be >= 1");
  const Eigen::MatrixXd candidates =
      draw_candidates(spec.action_dim(), m, low, high, rng);
  const Eigen::VectorXd coeffs = forward(net, state);
  const Eigen::VectorXd q = evaluate_actions(coeffs, spec, candidates);
  // strict > keeps the lowest index on ties
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < q.size(); ++k) {
    if (q[k] > q[best]) best = k;
  }
  return {candidates.col(best), q[best]};
}

Eigen::VectorXd explore_action(const NetworkParams& net, const BasisSpec& spec,
                               const Eigen::Ref<const Eigen::VectorXd>& state,
                               const ExplorationConfig& cfg, long global_step,
                               Rng& rng) {
  const int d = spec.action_dim();
  const double eps = epsilon_at(cfg, global_step);
  if (rng.uniform() < eps) {
    Eigen::VectorXd action(d);
    for (int j = 0; j < d; ++j) {
      action[j] = rng.uniform(cfg.action_low, cfg.action_high);
    }
    return action;
  }
  Eigen::VectorXd action =
      best_action(net, spec, state, cfg.candidates_m, cfg.action_low,
                  cfg.action_high, rng)
          .action;
  for (int j = 0; j < d; ++j) {
    action[j] += rng.normal(0.0, cfg.gaussian_std);
    action[j] = std::clamp(action[j], cfg.action_low, cfg.action_high);
  }
  return action;
}

}  // namespace rqf
