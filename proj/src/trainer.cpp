#include "rqf/trainer.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "rqf/rng.hpp"

namespace rqf {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// Fresh uniform candidates for one (agent, sample) pair, drawn candidate by
// candidate, component by component. Both update modes and both graph states
// consume draws in exactly this order, so runs that share a seed see the
// same candidates regardless of mode.
void fill_candidates(Eigen::MatrixXd& cand, double low, double high, Rng& rng) {
  for (Eigen::Index c = 0; c < cand.cols(); ++c) {
    for (Eigen::Index d = 0; d < cand.rows(); ++d) {
      cand(d, c) = rng.uniform(low, high);
    }
  }
}

}  // namespace

std::string mode_name(Mode mode) { return mode == Mode::kRqf ? "rqf" : "iqf"; }

void TrainConfig::validate() const {
  require(episodes >= 0, "config: episodes must be >= 0");
  require(gamma >= 0.0 && gamma < 1.0, "config: gamma must be in [0, 1)");
  require(std::isfinite(lr) && lr >= 0.0, "config: lr must be finite and >= 0");
  require(batch_b >= 1, "config: batch_b must be >= 1");
  require(replay_capacity >= 1, "config: replay_capacity must be >= 1");
  require(batch_b <= replay_capacity, "config: batch_b must be <= replay_capacity");
  require(update_every >= 1, "config: update_every must be >= 1");
  require(tau >= 0.0 && tau <= 1.0, "config: tau must be in [0, 1]");
  require(basis_order >= 1, "config: basis_order must be >= 1");
  require(candidates_m >= 1, "config: candidates_m must be >= 1");
  require(!hidden.empty(), "config: hidden must list at least one layer width");
  for (int h : hidden) require(h >= 1, "config: hidden widths must be >= 1");
  require(eval_every >= 1, "config: eval_every must be >= 1");
  require(eval_episodes >= 1, "config: eval_episodes must be >= 1");
  require(env.max_steps >= 1, "config: env.max_steps must be >= 1");
  require(env.dt > 0.0, "config: env.dt must be positive");
  rqf::validate(exploration);
  if (malfunction) {
    require(malfunction->episode >= 0, "config: malfunction.episode must be >= 0");
    require(malfunction->agent >= 0 && malfunction->agent < PlanarAntEnv::kNumAgents,
            "config: malfunction.agent must be in [0, 4)");
  }
  for (const auto* g : {&graph_pre, &graph_post}) {
    if (!g->has_value()) continue;
    if (auto err = rqf::validate(**g)) {
      throw std::invalid_argument("config: relational graph invalid: " + *err);
    }
    require((*g)->n_agents == PlanarAntEnv::kNumAgents,
            "config: relational graph must cover exactly 4 agents");
  }
}

double update_step(const Batch& batch, const BasisSpec& basis,
                   std::vector<NetworkParams>& prediction_nets,
                   std::vector<AdamState>& adam_states,
                   const std::vector<NetworkParams>& target_nets,
                   const RelationalGraph* graph, const UpdateSettings& settings,
                   Rng& rng) {
  const int n = static_cast<int>(prediction_nets.size());
  const Eigen::Index b = batch.size();
  require(n >= 1, "update: need at least one prediction net");
  require(b >= 1, "update: empty batch");
  require(static_cast<int>(target_nets.size()) == n &&
              static_cast<int>(adam_states.size()) == n,
          "update: prediction, target, and optimizer counts must match");
  require(batch.obs.rows() % n == 0 && batch.actions.rows() % n == 0,
          "update: batch rows not divisible by the agent count");
  const int obs_dim = static_cast<int>(batch.obs.rows()) / n;
  const int action_dim = static_cast<int>(batch.actions.rows()) / n;
  require(action_dim == basis.action_dim(),
          "update: batch action dim does not match the basis");
  require(settings.candidates_m >= 1, "update: candidates_m must be >= 1");
  require(settings.action_low < settings.action_high,
          "update: action_low must be < action_high");
  if (graph) {
    require(graph->n_agents == n, "update: graph agent count mismatch");
  }
  for (int j = 0; j < n; ++j) {
    require(prediction_nets[j].input_dim() == obs_dim &&
                target_nets[j].input_dim() == obs_dim,
            "update: net input dim does not match batch obs dim");
    require(prediction_nets[j].output_dim() == basis.num_terms() &&
                target_nets[j].output_dim() == basis.num_terms(),
            "update: net output dim does not match the basis term count");
  }

  const int m = settings.candidates_m;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(b);

  // Prediction side: Q_j of the stored actions, with caches for backprop.
  std::vector<ForwardCache> caches(n);
  std::vector<Eigen::MatrixXd> phi(n);       // num_terms x b per agent
  Eigen::MatrixXd q_pred(n, b);
  for (int j = 0; j < n; ++j) {
    const Eigen::MatrixXd coeffs =
        forward_batch(prediction_nets[j], batch.obs.middleRows(j * obs_dim, obs_dim),
                      &caches[j]);
    phi[j] = feature_matrix(basis, batch.actions.middleRows(j * action_dim, action_dim));
    q_pred.row(j) = (coeffs.array() * phi[j].array()).colwise().sum();
  }

  // Target side: best of m fresh uniform candidates per agent per sample.
  Eigen::MatrixXd q_best(n, b);
  Eigen::MatrixXd cand(action_dim, m);
  for (int j = 0; j < n; ++j) {
    const Eigen::MatrixXd coeffs_t =
        forward_batch(target_nets[j], batch.next_obs.middleRows(j * obs_dim, obs_dim));
    for (Eigen::Index k = 0; k < b; ++k) {
      fill_candidates(cand, settings.action_low, settings.action_high, rng);
      q_best(j, k) = evaluate_actions(coeffs_t.col(k), basis, cand).maxCoeff();
    }
  }

  const Eigen::VectorXd mask = ones - batch.done;  // (1 - done) bootstrap gate

  if (graph) {
    const Eigen::VectorXd sig = column_significance(*graph);
    const Eigen::VectorXd team_pred = q_pred.transpose() * sig;
    const Eigen::VectorXd team_best = q_best.transpose() * sig;
    const Eigen::VectorXd y =
        batch.rewards + settings.gamma * mask.cwiseProduct(team_best);
    const Eigen::VectorXd delta = team_pred - y;
    const double loss = delta.squaredNorm() / static_cast<double>(b);
    for (int j = 0; j < n; ++j) {
      // dQ_team/dQ_j is the column sum; zero means agent j's parameters are
      // untouched this step (no gradient, no optimizer state advance).
      if (sig(j) == 0.0) continue;
      const double scale = 2.0 * sig(j) / static_cast<double>(b);
      const Eigen::MatrixXd upstream =
          phi[j].array().rowwise() * (scale * delta.transpose()).array();
      const Gradients grads = backward_batch(prediction_nets[j], caches[j], upstream);
      adam_step(prediction_nets[j], adam_states[j], grads, settings.lr);
    }
    return loss;
  }

  // Independent mode: one TD loss per agent against the shared team reward.
  double loss_sum = 0.0;
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd y =
        batch.rewards + settings.gamma * mask.cwiseProduct(q_best.row(j).transpose());
    const Eigen::VectorXd delta = q_pred.row(j).transpose() - y;
    loss_sum += delta.squaredNorm() / static_cast<double>(b);
    const double scale = 2.0 / static_cast<double>(b);
    const Eigen::MatrixXd upstream =
        phi[j].array().rowwise() * (scale * delta.transpose()).array();
    const Gradients grads = backward_batch(prediction_nets[j], caches[j], upstream);
    adam_step(prediction_nets[j], adam_states[j], grads, settings.lr);
  }
  return loss_sum;
}

EvalResult evaluate_greedy(const std::vector<NetworkParams>& nets,
                           const BasisSpec& basis, const EnvParams& env_params,
                           std::optional<int> frozen_agent, int episodes,
                           int candidates_m, double action_low, double action_high,
                           std::uint64_t seed, long eval_ordinal) {
  require(episodes >= 1, "eval: episodes must be >= 1");
  require(static_cast<int>(nets.size()) == PlanarAntEnv::kNumAgents,
          "eval: expected one net per agent");

  EvalResult result;
  result.traces.reserve(episodes);
  double reward_sum = 0.0;
  long stable = 0;

  for (int e = 0; e < episodes; ++e) {
    Rng env_rng(stream_key(seed, "eval_env", static_cast<std::uint64_t>(eval_ordinal),
                           static_cast<std::uint64_t>(e)));
    Rng act_rng(stream_key(seed, "eval_act", static_cast<std::uint64_t>(eval_ordinal),
                           static_cast<std::uint64_t>(e)));
    PlanarAntEnv env(env_params);
    env.set_frozen_agent(frozen_agent);
    Eigen::MatrixXd obs = env.reset(env_rng);

    EpisodeTrace trace;
    trace.episode = e;
    trace.steps.push_back(TraceStep{0, 0.0, 0.0, 0.0, Eigen::MatrixXd(), false});

    double ep_reward = 0.0;
    int step = 0;
    while (true) {
      Eigen::MatrixXd joint(PlanarAntEnv::kActionDim, PlanarAntEnv::kNumAgents);
      for (int j = 0; j < PlanarAntEnv::kNumAgents; ++j) {
        joint.col(j) = best_action(nets[j], basis, obs.col(j), candidates_m,
                                   action_low, action_high, act_rng)
                           .action;
      }
      const StepResult res = env.step(joint);
      step += 1;
      ep_reward += res.reward;
      trace.steps.push_back(TraceStep{step, res.position(0), res.position(1),
                                      res.reward, joint, res.flipped});
      if (res.flipped) trace.flipped = true;
      obs = res.obs;
      if (res.done) break;
    }
    reward_sum += ep_reward;
    if (!trace.flipped) stable += 1;
    result.traces.push_back(std::move(trace));
  }

  result.mean_reward = reward_sum / static_cast<double>(episodes);
  result.stable_fraction = static_cast<double>(stable) / static_cast<double>(episodes);
  return result;
}

RunArtifacts train(const TrainConfig& config) {
  config.validate();

  const int n = PlanarAntEnv::kNumAgents;
  const int obs_dim = PlanarAntEnv::kObsDim;
  const int action_dim = PlanarAntEnv::kActionDim;
  const BasisSpec basis(config.basis_order, action_dim);

  ExplorationConfig expl = config.exploration;
  expl.candidates_m = config.candidates_m;
  rqf::validate(expl);

  UpdateSettings settings;
  settings.gamma = config.gamma;
  settings.lr = config.lr;
  settings.candidates_m = config.candidates_m;
  settings.action_low = expl.action_low;
  settings.action_high = expl.action_high;

  Rng init_rng(stream_key(config.seed, "init"));
  std::vector<NetworkParams> prediction;
  prediction.reserve(n);
  for (int j = 0; j < n; ++j) {
    prediction.push_back(init_network(obs_dim, config.hidden, basis.num_terms(), init_rng));
  }
  std::vector<NetworkParams> targets = prediction;  // targets start as copies
  std::vector<AdamState> adam;
  adam.reserve(n);
  for (int j = 0; j < n; ++j) adam.push_back(make_adam_state(prediction[j]));

  RunArtifacts artifacts;
  artifacts.initial_nets = prediction;

  RelationalGraph graph_pre;
  RelationalGraph graph_post;
  if (config.mode == Mode::kRqf) {
    graph_pre = config.graph_pre ? *config.graph_pre : identity_graph(n);
    if (config.graph_post) {
      graph_post = *config.graph_post;
    } else if (config.malfunction) {
      graph_post = malfunction_adjust(graph_pre, config.malfunction->agent);
    } else {
      graph_post = graph_pre;
    }
  }

  PlanarAntEnv env(config.env);
  ReplayBuffer replay(config.replay_capacity, n, obs_dim, action_dim);
  Rng env_rng(stream_key(config.seed, "env"));
  Rng explore_rng(stream_key(config.seed, "explore"));
  Rng sample_rng(stream_key(config.seed, "sample"));
  Rng target_rng(stream_key(config.seed, "target"));

  std::vector<double> episode_rewards;
  episode_rewards.reserve(config.episodes);
  long global_step = 0;
  double last_eval_mean = std::numeric_limits<double>::quiet_NaN();
  double last_eval_stable = std::numeric_limits<double>::quiet_NaN();

  for (long episode = 0; episode < config.episodes; ++episode) {
    const bool malfunction_on =
        config.malfunction && malfunction_active(*config.malfunction, episode);
    env.set_frozen_agent(malfunction_on
                             ? std::optional<int>(config.malfunction->agent)
                             : std::nullopt);
    const RelationalGraph* graph =
        config.mode == Mode::kRqf ? (malfunction_on ? &graph_post : &graph_pre)
                                  : nullptr;

    Eigen::MatrixXd obs = env.reset(env_rng);
    double ep_reward = 0.0;
    double loss_sum = 0.0;
    long loss_count = 0;

    while (true) {
      Eigen::MatrixXd joint(action_dim, n);
      for (int j = 0; j < n; ++j) {
        joint.col(j) = explore_action(prediction[j], basis, obs.col(j), expl,
                                      global_step, explore_rng);
      }
      const StepResult res = env.step(joint);
      replay.push(Transition{obs, joint, res.reward, res.obs, res.done});
      ep_reward += res.reward;
      global_step += 1;

      if (global_step % config.update_every == 0 &&
          replay.size() >= config.batch_b) {
        const Batch batch = replay.sample(config.batch_b, sample_rng);
        const double loss = update_step(batch, basis, prediction, adam, targets,
                                        graph, settings, target_rng);
        if (!config.soft_update_every_step) {
          for (int j = 0; j < n; ++j) soft_update(targets[j], prediction[j], config.tau);
        }
        loss_sum += loss;
        loss_count += 1;
        artifacts.total_updates += 1;
      }
      if (config.soft_update_every_step) {
        for (int j = 0; j < n; ++j) soft_update(targets[j], prediction[j], config.tau);
      }

      obs = res.obs;
      if (res.done) break;
    }
    artifacts.total_env_steps += env.step_index();
    episode_rewards.push_back(ep_reward);

    // Trailing window mean, same definition as metrics::moving_average.
    const long lo = episode + 1 >= kMovingAverageWindow
                        ? episode + 1 - kMovingAverageWindow
                        : 0;
    double window_sum = 0.0;
    for (long k = lo; k <= episode; ++k) window_sum += episode_rewards[k];

    CurvePoint point;
    point.episode = episode;
    point.train_reward_ma = window_sum / static_cast<double>(episode - lo + 1);
    point.loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count)
                                : std::numeric_limits<double>::quiet_NaN();

    if ((episode + 1) % config.eval_every == 0) {
      const long ordinal = (episode + 1) / config.eval_every;
      EvalResult ev = evaluate_greedy(prediction, basis, config.env,
                                      env.frozen_agent(), config.eval_episodes,
                                      config.candidates_m, expl.action_low,
                                      expl.action_high, config.seed, ordinal);
      last_eval_mean = ev.mean_reward;
      last_eval_stable = ev.stable_fraction;
      artifacts.final_eval_mean_reward = ev.mean_reward;
      artifacts.final_eval_stable_fraction = ev.stable_fraction;
      artifacts.final_eval_traces = std::move(ev.traces);
    }
    point.eval_mean_reward = last_eval_mean;
    point.eval_stable_frac = last_eval_stable;
    artifacts.curve.push_back(point);
  }

  artifacts.prediction_nets = std::move(prediction);
  artifacts.target_nets = std::move(targets);
  return artifacts;
}

}  // namespace rqf
