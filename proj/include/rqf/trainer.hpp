#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rqf/basis.hpp"
#include "rqf/env.hpp"
#include "rqf/funcnet.hpp"
#include "rqf/metrics.hpp"
#include "rqf/qfunctional.hpp"
#include "rqf/relational.hpp"
#include "rqf/replay.hpp"

namespace rqf {

class Rng;

enum class Mode { kRqf, kIqf };

std::string mode_name(Mode mode);

struct TrainConfig {
  Mode mode = Mode::kRqf;
  std::uint64_t seed = 1;
  long episodes = 2000;
  double gamma = 0.99;
  double lr = 1e-4;
  int batch_b = 512;
  int update_every = 10;  // env steps between network updates
  double tau = 0.01;
  long replay_capacity = 500000;
  int basis_order = 2;
  int candidates_m = 128;  // overrides exploration.candidates_m in train()
  std::vector<int> hidden = {256, 256, 256};
  ExplorationConfig exploration;
  long eval_every = 100;   // episodes between greedy evaluations
  int eval_episodes = 100;
  bool soft_update_every_step = false;  // default: soft update per network update
  EnvParams env;
  std::optional<MalfunctionSpec> malfunction;
  // Resolved graphs; ignored in independent mode. Absent pre defaults to the
  // identity graph; absent post defaults to pre with the failed column zeroed.
  std::optional<RelationalGraph> graph_pre;
  std::optional<RelationalGraph> graph_post;

  // Throws std::invalid_argument naming the first violated field.
  void validate() const;
};

struct UpdateSettings {
  double gamma = 0.99;
  double lr = 1e-4;
  int candidates_m = 128;
  double action_low = -1.0;
  double action_high = 1.0;
};

// One batched TD update over all agents.
//
// With a graph: per-sample team values mix the per-agent Q values through
// the graph's column sums; the TD target bootstraps from the mixed best
// candidate values under the target nets; a single squared-error loss
// (mean over the batch) backpropagates into every prediction net, scaled by
// that agent's column sum. Agents whose column sum is exactly zero receive
// no gradient and no optimizer step, so their parameters are a fixed point.
//
// With graph == nullptr each agent trains on its own independent TD loss
// against the shared team reward; the returned loss is the sum over agents.
//
// Fresh uniform target candidates are drawn from rng per agent per sample
// (agent outer, sample inner, then candidate, then action component), the
// same order both modes consume, so identical seeds see identical draws.
double update_step(const Batch& batch, const BasisSpec& basis,
                   std::vector<NetworkParams>& prediction_nets,
                   std::vector<AdamState>& adam_states,
                   const std::vector<NetworkParams>& target_nets,
                   const RelationalGraph* graph, const UpdateSettings& settings,
                   Rng& rng);

struct EvalResult {
  double mean_reward = 0.0;
  double stable_fraction = 0.0;
  std::vector<EpisodeTrace> traces;
};

// Greedy rollouts: no epsilon, no Gaussian noise, actions picked by
// candidate argmax. Episode e draws its env and action streams from
// (seed, eval_ordinal, e), so results are independent of evaluation order
// and bit-reproducible.
EvalResult evaluate_greedy(const std::vector<NetworkParams>& nets,
                           const BasisSpec& basis, const EnvParams& env_params,
                           std::optional<int> frozen_agent, int episodes,
                           int candidates_m, double action_low, double action_high,
                           std::uint64_t seed, long eval_ordinal);

struct RunArtifacts {
  std::vector<CurvePoint> curve;  // one point per training episode
  std::vector<EpisodeTrace> final_eval_traces;
  std::vector<NetworkParams> initial_nets;
  std::vector<NetworkParams> prediction_nets;
  std::vector<NetworkParams> target_nets;
  double final_eval_mean_reward = std::numeric_limits<double>::quiet_NaN();
  double final_eval_stable_fraction = std::numeric_limits<double>::quiet_NaN();
  long total_env_steps = 0;
  long total_updates = 0;
};

// Full training loop: per step each agent explores from its local
// observation, the joint action steps the shared env, the transition lands
// in replay, and every update_every steps one update_step plus target soft
// updates run (once the buffer holds a full batch). The malfunction freeze
// and the graph switch take effect together at the configured episode
// boundary. Greedy evaluation runs after every eval_every-th episode.
RunArtifacts train(const TrainConfig& config);

}  // namespace rqf
