#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rqf/trainer.hpp"
#include "rqf/rng.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <vector>

using namespace rqf;

namespace {

bool same_double_bits(double a, double b) {
  std::uint64_t ua, ub;
  std::memcpy(&ua, &a, 8);
  std::memcpy(&ub, &b, 8);
  return ua == ub;
}

bool same_bits(const NetworkParams& a, const NetworkParams& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    if (a.layers[l].weight.rows() != b.layers[l].weight.rows() ||
        a.layers[l].weight.cols() != b.layers[l].weight.cols() ||
        a.layers[l].bias.size() != b.layers[l].bias.size()) {
      return false;
    }
    if (std::memcmp(a.layers[l].weight.data(), b.layers[l].weight.data(),
                    sizeof(double) * a.layers[l].weight.size()) != 0) {
      return false;
    }
    if (std::memcmp(a.layers[l].bias.data(), b.layers[l].bias.data(),
                    sizeof(double) * a.layers[l].bias.size()) != 0) {
      return false;
    }
  }
  return true;
}

bool same_curves(const std::vector<CurvePoint>& a,
                 const std::vector<CurvePoint>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].episode != b[i].episode) return false;
    if (!same_double_bits(a[i].train_reward_ma, b[i].train_reward_ma) ||
        !same_double_bits(a[i].eval_mean_reward, b[i].eval_mean_reward) ||
        !same_double_bits(a[i].eval_stable_frac, b[i].eval_stable_frac) ||
        !same_double_bits(a[i].loss, b[i].loss)) {
      return false;
    }
  }
  return true;
}

// Two-agent, one-dimensional-action setting small enough to replay the
// whole update by hand.
struct TinySetup {
  BasisSpec basis{1, 1};  // terms: constant, a
  int n = 2;
  int obs_dim = 3;
  int action_dim = 1;
  std::vector<NetworkParams> preds;
  std::vector<NetworkParams> targets;
  std::vector<AdamState> adam;
  Batch batch;
  UpdateSettings settings;

  explicit TinySetup(std::uint64_t seed, int b = 5) {
    Rng rng(stream_key(seed, "tiny-setup"));
    for (int j = 0; j < n; ++j) {
      preds.push_back(init_network(obs_dim, {4}, basis.num_terms(), rng));
      targets.push_back(init_network(obs_dim, {4}, basis.num_terms(), rng));
      adam.push_back(make_adam_state(preds[j]));
    }
    batch.obs.resize(n * obs_dim, b);
    batch.actions.resize(n * action_dim, b);
    batch.next_obs.resize(n * obs_dim, b);
    batch.rewards.resize(b);
    batch.done.resize(b);
    for (int k = 0; k < b; ++k) {
      for (int r = 0; r < n * obs_dim; ++r) {
        batch.obs(r, k) = rng.uniform(-1.0, 1.0);
        batch.next_obs(r, k) = rng.uniform(-1.0, 1.0);
      }
      for (int r = 0; r < n * action_dim; ++r) {
        batch.actions(r, k) = rng.uniform(-1.0, 1.0);
      }
      batch.rewards[k] = rng.uniform(-2.0, 2.0);
      batch.done[k] = k % 3 == 0 ? 1.0 : 0.0;
    }
    settings.gamma = 0.9;
    settings.lr = 1e-3;
    settings.candidates_m = 4;
    settings.action_low = -1.0;
    settings.action_high = 1.0;
  }
};

// Replays the documented update arithmetic: prediction values from the
// cached batched forward, fresh target candidates in (agent, sample,
// candidate, component) order, graph mixing through column sums, squared
// TD error averaged over the batch, and the per-agent chain rule through
// the feature matrix.
struct TinyOracle {
  Eigen::MatrixXd q_pred;  // n x b
  Eigen::MatrixXd q_best;  // n x b
  std::vector<Eigen::MatrixXd> phi;
  std::vector<ForwardCache> caches;

  TinyOracle(TinySetup& s, Rng& rng) {
    const int b = static_cast<int>(s.batch.size());
    q_pred.resize(s.n, b);
    q_best.resize(s.n, b);
    phi.resize(s.n);
    caches.resize(s.n);
    for (int j = 0; j < s.n; ++j) {
      const Eigen::MatrixXd coeffs = forward_batch(
          s.preds[j], s.batch.obs.middleRows(j * s.obs_dim, s.obs_dim),
          &caches[j]);
      phi[j] = feature_matrix(
          s.basis, s.batch.actions.middleRows(j * s.action_dim, s.action_dim));
      for (int k = 0; k < b; ++k) {
        q_pred(j, k) = coeffs(0, k) * phi[j](0, k) + coeffs(1, k) * phi[j](1, k);
      }
    }
    for (int j = 0; j < s.n; ++j) {
      const Eigen::MatrixXd tc = forward_batch(
          s.targets[j], s.batch.next_obs.middleRows(j * s.obs_dim, s.obs_dim));
      for (int k = 0; k < b; ++k) {
        double best = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < s.settings.candidates_m; ++c) {
          const double a =
              rng.uniform(s.settings.action_low, s.settings.action_high);
          const double q = tc(0, k) * 1.0 + tc(1, k) * a;
          if (q > best) best = q;
        }
        q_best(j, k) = best;
      }
    }
  }
};

TrainConfig small_train_config() {
  TrainConfig cfg;
  cfg.seed = 11;
  cfg.episodes = 6;
  cfg.batch_b = 8;
  cfg.update_every = 3;
  cfg.replay_capacity = 64;
  cfg.candidates_m = 8;
  cfg.hidden = {8};
  cfg.lr = 1e-3;
  cfg.eval_every = 2;
  cfg.eval_episodes = 2;
  cfg.env.max_steps = 5;
  cfg.exploration.epsilon_decay_steps = 20;
  return cfg;
}

}  // namespace

TEST_CASE("mode names spell the two trainer modes") {
  CHECK_EQ(mode_name(Mode::kRqf), "rqf");
  CHECK_EQ(mode_name(Mode::kIqf), "iqf");
}

TEST_CASE("train config validation names the violated field") {
  TrainConfig good = small_train_config();
  CHECK_NOTHROW(good.validate());

  auto expect = [](TrainConfig cfg, const char* needle) {
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains(needle),
                         std::invalid_argument);
  };
  TrainConfig cfg = small_train_config();
  cfg.episodes = -1;
  expect(cfg, "episodes");
  cfg = small_train_config();
  cfg.gamma = 1.0;
  expect(cfg, "gamma");
  cfg = small_train_config();
  cfg.lr = -1e-4;
  expect(cfg, "lr");
  cfg = small_train_config();
  cfg.batch_b = 0;
  expect(cfg, "batch_b");
  cfg = small_train_config();
  cfg.batch_b = 100;
  cfg.replay_capacity = 50;
  expect(cfg, "batch_b must be <= replay_capacity");
  cfg = small_train_config();
  cfg.update_every = 0;
  expect(cfg, "update_every");
  cfg = small_train_config();
  cfg.tau = 1.5;
  expect(cfg, "tau");
  cfg = small_train_config();
  cfg.basis_order = 0;
  expect(cfg, "basis_order");
  cfg = small_train_config();
  cfg.candidates_m = 0;
  expect(cfg, "candidates_m");
  cfg = small_train_config();
  cfg.hidden = {};
  expect(cfg, "hidden");
  cfg = small_train_config();
  cfg.hidden = {8, 0};
  expect(cfg, "hidden widths");
  cfg = small_train_config();
  cfg.eval_every = 0;
  expect(cfg, "eval_every");
  cfg = small_train_config();
  cfg.eval_episodes = 0;
  expect(cfg, "eval_episodes");
  cfg = small_train_config();
  cfg.env.max_steps = 0;
  expect(cfg, "env.max_steps");
  cfg = small_train_config();
  cfg.malfunction = MalfunctionSpec{-5, 0};
  expect(cfg, "malfunction.episode");
  cfg = small_train_config();
  cfg.malfunction = MalfunctionSpec{10, 7};
  expect(cfg, "malfunction.agent");
  cfg = small_train_config();
  cfg.graph_pre = identity_graph(3);
  expect(cfg, "4 agents");
  cfg = small_train_config();
  cfg.graph_pre = identity_graph(4);
  cfg.graph_pre->weights(0, 0) = 2.0;
  expect(cfg, "graph invalid");
}

TEST_CASE("graph-mixed update matches the hand replay bit for bit") {
  TinySetup real(404);
  TinySetup mirror(404);

  RelationalGraph graph;
  graph.n_agents = 2;
  graph.weights.resize(2, 2);
  graph.weights << 1.0, 0.5, 0.0, 0.75;  // column sums 1.0 and 1.25

  const std::uint64_t key = stream_key(9, "update");
  Rng rng(key);
  const double loss = update_step(real.batch, real.basis, real.preds,
                                  real.adam, real.targets, &graph,
                                  real.settings, rng);

  Rng oracle_rng(key);
  TinyOracle o(mirror, oracle_rng);
  const int b = static_cast<int>(mirror.batch.size());
  const Eigen::Vector2d sig(1.0, 1.25);

  Eigen::VectorXd delta(b);
  double loss_oracle = 0.0;
  for (int k = 0; k < b; ++k) {
    const double team_pred = sig(0) * o.q_pred(0, k) + sig(1) * o.q_pred(1, k);
    const double team_best = sig(0) * o.q_best(0, k) + sig(1) * o.q_best(1, k);
    const double mask = 1.0 - mirror.batch.done[k];
    const double y =
        mirror.batch.rewards[k] + mirror.settings.gamma * (mask * team_best);
    delta[k] = team_pred - y;
    loss_oracle += delta[k] * delta[k];
  }
  loss_oracle /= b;
  CHECK(loss == doctest::Approx(loss_oracle).epsilon(1e-12));

  for (int j = 0; j < 2; ++j) {
    const double scale = 2.0 * sig(j) / static_cast<double>(b);
    Eigen::MatrixXd upstream(2, b);
    for (int k = 0; k < b; ++k) {
      const double sd = scale * delta[k];
      upstream(0, k) = o.phi[j](0, k) * sd;
      upstream(1, k) = o.phi[j](1, k) * sd;
    }
    const Gradients grads =
        backward_batch(mirror.preds[j], o.caches[j], upstream);
    adam_step(mirror.preds[j], mirror.adam[j], grads, mirror.settings.lr);
    CHECK(same_bits(real.preds[j], mirror.preds[j]));
    CHECK_EQ(real.adam[j].step, 1);
  }
}

TEST_CASE("independent update matches the per-agent hand replay") {
  TinySetup real(505);
  TinySetup mirror(505);

  const std::uint64_t key = stream_key(10, "iqf-update");
  Rng rng(key);
  const double loss = update_step(real.batch, real.basis, real.preds,
                                  real.adam, real.targets, nullptr,
                                  real.settings, rng);

  Rng oracle_rng(key);
  TinyOracle o(mirror, oracle_rng);
  const int b = static_cast<int>(mirror.batch.size());

  double loss_oracle = 0.0;
  for (int j = 0; j < 2; ++j) {
    Eigen::VectorXd delta(b);
    double agent_loss = 0.0;
    for (int k = 0; k < b; ++k) {
      const double mask = 1.0 - mirror.batch.done[k];
      const double y = mirror.batch.rewards[k] +
                       mirror.settings.gamma * (mask * o.q_best(j, k));
      delta[k] = o.q_pred(j, k) - y;
      agent_loss += delta[k] * delta[k];
    }
    loss_oracle += agent_loss / b;

    const double scale = 2.0 / static_cast<double>(b);
    Eigen::MatrixXd upstream(2, b);
    for (int k = 0; k < b; ++k) {
      const double sd = scale * delta[k];
      upstream(0, k) = o.phi[j](0, k) * sd;
      upstream(1, k) = o.phi[j](1, k) * sd;
    }
    const Gradients grads =
        backward_batch(mirror.preds[j], o.caches[j], upstream);
    adam_step(mirror.preds[j], mirror.adam[j], grads, mirror.settings.lr);
    CHECK(same_bits(real.preds[j], mirror.preds[j]));
  }
  CHECK(loss == doctest::Approx(loss_oracle).epsilon(1e-12));
}

TEST_CASE("both modes consume the target candidate stream identically") {
  TinySetup rqf_setup(606);
  TinySetup iqf_setup(606);
  RelationalGraph graph = identity_graph(2);

  const std::uint64_t key = stream_key(11, "stream");
  Rng r1(key);
  Rng r2(key);
  update_step(rqf_setup.batch, rqf_setup.basis, rqf_setup.preds, rqf_setup.adam,
              rqf_setup.targets, &graph, rqf_setup.settings, r1);
  update_step(iqf_setup.batch, iqf_setup.basis, iqf_setup.preds, iqf_setup.adam,
              iqf_setup.targets, nullptr, iqf_setup.settings, r2);
  CHECK_EQ(r1.next_u64(), r2.next_u64());
}

TEST_CASE("a zero-significance column freezes that agent exactly") {
  TinySetup run_a(707);
  RelationalGraph graph;
  graph.n_agents = 2;
  graph.weights.resize(2, 2);
  graph.weights << 1.0, 0.0, 0.5, 0.0;  // column 1 is dead

  const NetworkParams agent1_before = run_a.preds[1];
  const std::uint64_t key = stream_key(12, "dead-column");
  Rng rng(key);
  const double loss_a = update_step(run_a.batch, run_a.basis, run_a.preds,
                                    run_a.adam, run_a.targets, &graph,
                                    run_a.settings, rng);

  // The dead agent's parameters and optimizer state are a strict fixed
  // point; the live agent still moves.
  CHECK(same_bits(run_a.preds[1], agent1_before));
  CHECK_EQ(run_a.adam[1].step, 0);
  CHECK(run_a.adam[1].m.layers[0].weight.isZero(0.0));
  CHECK_EQ(run_a.adam[0].step, 1);

  // Replacing the dead agent's networks changes nothing observable: same
  // loss, bitwise-identical update of the live agent.
  TinySetup run_b(707);
  Rng swap_rng(stream_key(13, "swap"));
  run_b.preds[1] = init_network(run_b.obs_dim, {4}, 2, swap_rng);
  run_b.targets[1] = init_network(run_b.obs_dim, {4}, 2, swap_rng);
  Rng rng_b(key);
  const double loss_b = update_step(run_b.batch, run_b.basis, run_b.preds,
                                    run_b.adam, run_b.targets, &graph,
                                    run_b.settings, rng_b);
  CHECK_EQ(loss_a, loss_b);
  CHECK(same_bits(run_a.preds[0], run_b.preds[0]));
}

TEST_CASE("terminal samples drop the bootstrap term") {
  TinySetup base(808, 1);
  base.batch.done[0] = 1.0;

  // With done = 1 the target reduces to the reward: replacing the target
  // networks cannot change the loss.
  TinySetup other(808, 1);
  other.batch.done[0] = 1.0;
  Rng swap_rng(stream_key(14, "targets"));
  other.targets[0] = init_network(other.obs_dim, {4}, 2, swap_rng);
  other.targets[1] = init_network(other.obs_dim, {4}, 2, swap_rng);

  RelationalGraph graph = identity_graph(2);
  const std::uint64_t key = stream_key(15, "done-mask");
  Rng r1(key);
  Rng r2(key);
  const double loss_base = update_step(base.batch, base.basis, base.preds,
                                       base.adam, base.targets, &graph,
                                       base.settings, r1);
  const double loss_other = update_step(other.batch, other.basis, other.preds,
                                        other.adam, other.targets, &graph,
                                        other.settings, r2);
  CHECK_EQ(loss_base, loss_other);
}

TEST_CASE("with gamma zero the loss is the squared reward residual") {
  TinySetup s(909, 1);
  s.batch.done[0] = 0.0;
  s.settings.gamma = 0.0;
  RelationalGraph graph = identity_graph(2);

  // Predicted team value of the stored sample, via scalar evaluation.
  double team = 0.0;
  for (int j = 0; j < 2; ++j) {
    const Eigen::VectorXd coeffs =
        forward(s.preds[j], s.batch.obs.col(0).segment(j * s.obs_dim, s.obs_dim));
    const Eigen::VectorXd a =
        s.batch.actions.col(0).segment(j * s.action_dim, s.action_dim);
    team += coeffs.dot(features(s.basis, a));
  }
  const double expected = (team - s.batch.rewards[0]) * (team - s.batch.rewards[0]);

  Rng rng(stream_key(16, "gamma0"));
  const double loss = update_step(s.batch, s.basis, s.preds, s.adam, s.targets,
                                  &graph, s.settings, rng);
  CHECK(loss == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("zero learning rate computes the loss without moving parameters") {
  TinySetup s(111);
  s.settings.lr = 0.0;
  const std::vector<NetworkParams> before = s.preds;
  RelationalGraph graph = identity_graph(2);
  Rng rng(stream_key(17, "lr0"));
  const double loss = update_step(s.batch, s.basis, s.preds, s.adam, s.targets,
                                  &graph, s.settings, rng);
  CHECK(std::isfinite(loss));
  CHECK(same_bits(s.preds[0], before[0]));
  CHECK(same_bits(s.preds[1], before[1]));
  CHECK_EQ(s.adam[0].step, 1);  // the optimizer state still advances
}

TEST_CASE("update_step rejects inconsistent inputs") {
  TinySetup s(222);
  Rng rng(stream_key(18, "bad"));

  std::vector<AdamState> short_adam(1, make_adam_state(s.preds[0]));
  CHECK_THROWS_WITH_AS(update_step(s.batch, s.basis, s.preds, short_adam,
                                   s.targets, nullptr, s.settings, rng),
                       doctest::Contains("counts must match"),
                       std::invalid_argument);

  RelationalGraph graph = identity_graph(3);
  CHECK_THROWS_WITH_AS(update_step(s.batch, s.basis, s.preds, s.adam,
                                   s.targets, &graph, s.settings, rng),
                       doctest::Contains("graph agent count"),
                       std::invalid_argument);

  UpdateSettings bad = s.settings;
  bad.candidates_m = 0;
  CHECK_THROWS_AS(update_step(s.batch, s.basis, s.preds, s.adam, s.targets,
                              nullptr, bad, rng),
                  std::invalid_argument);

  // Basis with the wrong action dimensionality for the stored actions.
  const BasisSpec wide(1, 2);
  CHECK_THROWS_WITH_AS(update_step(s.batch, wide, s.preds, s.adam, s.targets,
                                   nullptr, s.settings, rng),
                       doctest::Contains("action dim"), std::invalid_argument);
}

TEST_CASE("greedy evaluation replays its per-episode streams") {
  Rng init(stream_key(33, "eval-nets"));
  const BasisSpec basis(2, 2);
  std::vector<NetworkParams> nets;
  for (int j = 0; j < 4; ++j) {
    nets.push_back(init_network(6, {8}, basis.num_terms(), init));
  }
  EnvParams env_params;
  env_params.max_steps = 6;

  const EvalResult result = evaluate_greedy(nets, basis, env_params,
                                            std::nullopt, 3, 8, -1.0, 1.0,
                                            /*seed=*/77, /*eval_ordinal=*/2);
  REQUIRE_EQ(result.traces.size(), 3);

  double reward_sum = 0.0;
  long stable = 0;
  for (int e = 0; e < 3; ++e) {
    Rng env_rng(stream_key(77, "eval_env", 2, static_cast<std::uint64_t>(e)));
    Rng act_rng(stream_key(77, "eval_act", 2, static_cast<std::uint64_t>(e)));
    PlanarAntEnv env(env_params);
    Eigen::MatrixXd obs = env.reset(env_rng);

    const EpisodeTrace& trace = result.traces[e];
    CHECK_EQ(trace.episode, e);
    REQUIRE(trace.steps.size() >= 2);
    CHECK_EQ(trace.steps[0].step, 0);
    CHECK_EQ(trace.steps[0].x, 0.0);
    CHECK_EQ(trace.steps[0].reward, 0.0);
    CHECK_EQ(trace.steps[0].joint_action.size(), 0);

    double ep_reward = 0.0;
    std::size_t row = 1;
    while (true) {
      Eigen::MatrixXd joint(2, 4);
      for (int j = 0; j < 4; ++j) {
        joint.col(j) =
            best_action(nets[j], basis, obs.col(j), 8, -1.0, 1.0, act_rng).action;
      }
      const StepResult res = env.step(joint);
      REQUIRE(row < trace.steps.size());
      CHECK_EQ(trace.steps[row].x, res.position(0));
      CHECK_EQ(trace.steps[row].y, res.position(1));
      CHECK_EQ(trace.steps[row].reward, res.reward);
      CHECK(trace.steps[row].joint_action == joint);
      ep_reward += res.reward;
      obs = res.obs;
      row += 1;
      if (res.done) break;
    }
    CHECK_EQ(row, trace.steps.size());
    reward_sum += ep_reward;
    if (!trace.flipped) stable += 1;
  }
  CHECK_EQ(result.mean_reward, reward_sum / 3.0);
  CHECK_EQ(result.stable_fraction, static_cast<double>(stable) / 3.0);

  // Bitwise repeatability of the whole evaluation.
  const EvalResult again = evaluate_greedy(nets, basis, env_params,
                                           std::nullopt, 3, 8, -1.0, 1.0, 77, 2);
  CHECK_EQ(result.mean_reward, again.mean_reward);
  CHECK_EQ(result.stable_fraction, again.stable_fraction);

  CHECK_THROWS_AS(evaluate_greedy(nets, basis, env_params, std::nullopt, 0, 8,
                                  -1.0, 1.0, 77, 2),
                  std::invalid_argument);
  nets.pop_back();
  CHECK_THROWS_AS(evaluate_greedy(nets, basis, env_params, std::nullopt, 1, 8,
                                  -1.0, 1.0, 77, 2),
                  std::invalid_argument);
}

TEST_CASE("training with zero episodes returns the untouched starting state") {
  TrainConfig cfg = small_train_config();
  cfg.episodes = 0;
  const RunArtifacts art = train(cfg);
  CHECK(art.curve.empty());
  CHECK_EQ(art.total_env_steps, 0);
  CHECK_EQ(art.total_updates, 0);
  CHECK(std::isnan(art.final_eval_mean_reward));
  REQUIRE_EQ(art.initial_nets.size(), 4);
  for (int j = 0; j < 4; ++j) {
    CHECK(same_bits(art.initial_nets[j], art.prediction_nets[j]));
    CHECK(same_bits(art.initial_nets[j], art.target_nets[j]));
  }

  // The starting networks come from the documented init stream.
  Rng mirror(stream_key(cfg.seed, "init"));
  const BasisSpec basis(cfg.basis_order, 2);
  for (int j = 0; j < 4; ++j) {
    const NetworkParams expected =
        init_network(6, cfg.hidden, basis.num_terms(), mirror);
    CHECK(same_bits(art.initial_nets[j], expected));
  }
}

TEST_CASE("small training runs produce a structurally sound curve") {
  TrainConfig cfg = small_train_config();
  const RunArtifacts art = train(cfg);
  REQUIRE_EQ(art.curve.size(), 6);
  for (int e = 0; e < 6; ++e) {
    CHECK_EQ(art.curve[e].episode, e);
    CHECK(std::isfinite(art.curve[e].train_reward_ma));
  }
  // Evaluation cadence: episodes 0 has no eval yet, 1 evaluates, 2 carries
  // the same values, 3 evaluates again.
  CHECK(std::isnan(art.curve[0].eval_mean_reward));
  CHECK(std::isnan(art.curve[0].eval_stable_frac));
  CHECK(std::isfinite(art.curve[1].eval_mean_reward));
  CHECK(same_double_bits(art.curve[1].eval_mean_reward,
                         art.curve[2].eval_mean_reward));
  CHECK(same_double_bits(art.curve[1].eval_stable_frac,
                         art.curve[2].eval_stable_frac));
  CHECK(std::isfinite(art.curve[5].eval_mean_reward));
  CHECK(same_double_bits(art.curve[5].eval_mean_reward,
                         art.final_eval_mean_reward));

  // No update can run before the buffer holds a full batch.
  CHECK(std::isnan(art.curve[0].loss));
  CHECK(art.total_updates > 0);
  bool some_loss = false;
  for (const auto& p : art.curve) some_loss |= std::isfinite(p.loss);
  CHECK(some_loss);

  CHECK(art.total_env_steps >= 6);
  CHECK(art.total_env_steps <= 6 * cfg.env.max_steps);
  CHECK_EQ(art.final_eval_traces.size(), 2);

  // Training moved the prediction nets away from their initialization.
  bool moved = false;
  for (int j = 0; j < 4; ++j) {
    moved |= !same_bits(art.initial_nets[j], art.prediction_nets[j]);
  }
  CHECK(moved);
}

TEST_CASE("identical configs train to bitwise-identical artifacts") {
  TrainConfig cfg = small_train_config();
  const RunArtifacts a = train(cfg);
  const RunArtifacts b = train(cfg);
  CHECK(same_curves(a.curve, b.curve));
  CHECK_EQ(a.total_env_steps, b.total_env_steps);
  CHECK_EQ(a.total_updates, b.total_updates);
  for (int j = 0; j < 4; ++j) {
    CHECK(same_bits(a.prediction_nets[j], b.prediction_nets[j]));
    CHECK(same_bits(a.target_nets[j], b.target_nets[j]));
  }
  REQUIRE_EQ(a.final_eval_traces.size(), b.final_eval_traces.size());
  for (std::size_t t = 0; t < a.final_eval_traces.size(); ++t) {
    REQUIRE_EQ(a.final_eval_traces[t].steps.size(),
               b.final_eval_traces[t].steps.size());
    for (std::size_t s = 0; s < a.final_eval_traces[t].steps.size(); ++s) {
      CHECK(same_double_bits(a.final_eval_traces[t].steps[s].reward,
                             b.final_eval_traces[t].steps[s].reward));
    }
  }
}

TEST_CASE("modes only diverge once updates begin") {
  // A batch larger than every step this run can take: no update ever runs,
  // so the relational graph is never consulted and the two modes must match
  // bit for bit.
  TrainConfig cfg = small_train_config();
  cfg.batch_b = 10000;
  cfg.replay_capacity = 10000;
  cfg.episodes = 4;
  cfg.mode = Mode::kRqf;
  const RunArtifacts rqf_run = train(cfg);
  cfg.mode = Mode::kIqf;
  const RunArtifacts iqf_run = train(cfg);
  CHECK_EQ(rqf_run.total_updates, 0);
  CHECK(same_curves(rqf_run.curve, iqf_run.curve));
  for (int j = 0; j < 4; ++j) {
    CHECK(same_bits(rqf_run.prediction_nets[j], iqf_run.prediction_nets[j]));
  }
}

TEST_CASE("the malfunction boundary is the first episode that diverges") {
  // With updates disabled the exploration stream is independent of the
  // graph, so two runs differing only in the malfunction episode evolve
  // identically until the earlier freeze kicks in.
  TrainConfig early = small_train_config();
  early.batch_b = 10000;
  early.replay_capacity = 10000;
  early.episodes = 4;
  early.eval_every = 100;  // keep evaluation out of the picture
  early.malfunction = MalfunctionSpec{2, 0};
  TrainConfig late = early;
  late.malfunction = MalfunctionSpec{3, 0};

  const RunArtifacts a = train(early);
  const RunArtifacts b = train(late);
  REQUIRE_EQ(a.curve.size(), 4);
  CHECK(same_double_bits(a.curve[0].train_reward_ma, b.curve[0].train_reward_ma));
  CHECK(same_double_bits(a.curve[1].train_reward_ma, b.curve[1].train_reward_ma));
  CHECK_FALSE(same_double_bits(a.curve[2].train_reward_ma,
                               b.curve[2].train_reward_ma));
}

TEST_CASE("an immediate malfunction pins the dead agent under the default post graph") {
  // Freeze from episode 0 in graph mode: the failed agent's column is
  // zeroed, so its prediction network never receives an optimizer step.
  TrainConfig cfg = small_train_config();
  cfg.mode = Mode::kRqf;
  cfg.episodes = 8;
  cfg.malfunction = MalfunctionSpec{0, 1};
  const RunArtifacts art = train(cfg);
  CHECK(art.total_updates > 0);
  CHECK(same_bits(art.prediction_nets[1], art.initial_nets[1]));
  bool others_moved = false;
  for (int j : {0, 2, 3}) {
    others_moved |= !same_bits(art.prediction_nets[j], art.initial_nets[j]);
  }
  CHECK(others_moved);

  // Independent mode keeps training the frozen agent's network.
  cfg.mode = Mode::kIqf;
  const RunArtifacts iqf_art = train(cfg);
  CHECK(iqf_art.total_updates > 0);
  CHECK_FALSE(same_bits(iqf_art.prediction_nets[1], iqf_art.initial_nets[1]));
}

TEST_CASE("per-step soft updates are accepted and keep targets tracking") {
  TrainConfig cfg = small_train_config();
  cfg.soft_update_every_step = true;
  cfg.episodes = 3;
  const RunArtifacts art = train(cfg);
  REQUIRE_EQ(art.curve.size(), 3);
  bool target_moved = false;
  for (int j = 0; j < 4; ++j) {
    target_moved |= !same_bits(art.target_nets[j], art.initial_nets[j]);
  }
  CHECK(target_moved);
}
