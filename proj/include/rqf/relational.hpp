#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>

namespace rqf {

// Directed weighted graph over the team. weights(i, j) = w_ij is the
// significance agent i attributes to agent j's action value; weights are
// confined to [0, 1] and an absent edge is 0.
struct RelationalGraph {
  int n_agents = 0;
  Eigen::MatrixXd weights;  // n_agents x n_agents
};

// Self-loops of weight 1: team value reduces to the plain sum of per-agent
// action values.
RelationalGraph identity_graph(int n_agents);

// nullopt when every invariant holds, otherwise a description of the first
// violation (with indices).
std::optional<std::string> validate(const RelationalGraph& graph);

// Q_team = sum_i sum_j w_ij * Q_j, i.e. dot(column sums, per_agent_q).
double team_q(const RelationalGraph& graph,
              const Eigen::Ref<const Eigen::VectorXd>& per_agent_q);

// Column sums of the weight matrix: entry j is the total significance the
// team attributes to agent j, and also dQ_team/dQ_j.
Eigen::VectorXd column_significance(const RelationalGraph& graph);

// Copy with column failed_agent zeroed: no agent attributes significance to
// the failed agent's action value any more.
RelationalGraph malfunction_adjust(const RelationalGraph& graph,
                                   int failed_agent);

// JSON file format: {"n_agents": 4, "weights": [[...], ...]} where row i
// holds w_ij for j = 0..n-1.
RelationalGraph load_graph_json(const std::string& path);
void save_graph_json(const RelationalGraph& graph, const std::string& path);

}  // namespace rqf
