#include "rqf/relational.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace rqf {

RelationalGraph identity_graph(int n_agents) {
  if (n_agents < 1) {
    throw std::invalid_argument("identity_graph: n_agents must be >= 1");
  }
  return {n_agents, Eigen::MatrixXd::Identity(n_agents, n_agents)};
}

std::optional<std::string> validate(const RelationalGraph& graph) {
  if (graph.n_agents < 1) return "n_agents must be >= 1";
  if (graph.weights.rows() != graph.n_agents ||
      graph.weights.cols() != graph.n_agents) {
    return "weights must be " + std::to_string(graph.n_agents) + "x" +
           std::to_string(graph.n_agents) + ", got " +
           std::to_string(graph.weights.rows()) + "x" +
           std::to_string(graph.weights.cols());
  }
  for (int i = 0; i < graph.n_agents; ++i) {
    for (int j = 0; j < graph.n_agents; ++j) {
      const double w = graph.weights(i, j);
      if (!std::isfinite(w)) {
        return "weight at (" + std::to_string(i) + "," + std::to_string(j) +
               ") is not finite";
      }
      if (w < 0.0 || w > 1.0) {
        return "weight at (" + std::to_string(i) + "," + std::to_string(j) +
               ") is outside [0, 1]: " + std::to_string(w);
      }
    }
  }
  return std::nullopt;
}

double team_q(const RelationalGraph& graph,
              const Eigen::Ref<const Eigen::VectorXd>& per_agent_q) {
  if (per_agent_q.size() != graph.n_agents) {
    throw std::invalid_argument("team_q: expected " +
                                std::to_string(graph.n_agents) +
                                " per-agent values, got " +
                                std::to_string(per_agent_q.size()));
  }
  // Sequential accumulation in agent order; a zero significance contributes
  // an exact zero, so the result is invariant to that agent's value.
  const Eigen::VectorXd sig = column_significance(graph);
  double q = 0.0;
  for (int j = 0; j < graph.n_agents; ++j) q += sig(j) * per_agent_q(j);
  return q;
}

Eigen::VectorXd column_significance(const RelationalGraph& graph) {
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(graph.n_agents);
  for (int j = 0; j < graph.n_agents; ++j) {
    double s = 0.0;
    for (int i = 0; i < graph.n_agents; ++i) s += graph.weights(i, j);
    sums(j) = s;
  }
  return sums;
}

RelationalGraph malfunction_adjust(const RelationalGraph& graph,
                                   int failed_agent) {
  if (failed_agent < 0 || failed_agent >= graph.n_agents) {
    throw std::out_of_range("malfunction_adjust: agent index " +
                            std::to_string(failed_agent) +
                            " out of range for " +
                            std::to_string(graph.n_agents) + " agents");
  }
  RelationalGraph adjusted = graph;
  adjusted.weights.col(failed_agent).setZero();
  return adjusted;
}

RelationalGraph load_graph_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open graph file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("graph file " + path + " is not valid JSON: " +
                             e.what());
  }
  if (!j.is_object() || !j.contains("n_agents") || !j.contains("weights")) {
    throw std::runtime_error("graph file " + path +
                             " must be {\"n_agents\": n, \"weights\": [[...]]}");
  }
  RelationalGraph graph;
  graph.n_agents = j.at("n_agents").get<int>();
  const auto& rows = j.at("weights");
  if (!rows.is_array() || static_cast<int>(rows.size()) != graph.n_agents) {
    throw std::runtime_error("graph file " + path + ": weights must have " +
                             std::to_string(graph.n_agents) + " rows");
  }
  graph.weights.resize(graph.n_agents, graph.n_agents);
  for (int i = 0; i < graph.n_agents; ++i) {
    const auto& row = rows.at(i);
    if (!row.is_array() || static_cast<int>(row.size()) != graph.n_agents) {
      throw std::runtime_error("graph file " + path + ": row " +
                               std::to_string(i) + " must have " +
                               std::to_string(graph.n_agents) + " entries");
    }
    for (int jj = 0; jj < graph.n_agents; ++jj) {
      graph.weights(i, jj) = row.at(jj).get<double>();
    }
  }
  if (auto err = validate(graph)) {
    throw std::runtime_error("graph file " + path + " invalid: " + *err);
  }
  return graph;
}

void save_graph_json(const RelationalGraph& graph, const std::string& path) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < graph.n_agents; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < graph.n_agents; ++j) {
      row.push_back(graph.weights(i, j));
    }
    rows.push_back(row);
  }
  nlohmann::json j{{"n_agents", graph.n_agents}, {"weights", rows}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write graph file: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace rqf
