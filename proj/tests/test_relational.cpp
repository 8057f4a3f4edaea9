#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rqf/relational.hpp"
#include "rqf/rng.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

using namespace rqf;

namespace {

Eigen::VectorXd qvec(double a, double b, double c, double d) {
  Eigen::VectorXd q(4);
  q << a, b, c, d;
  return q;
}

}  // namespace

TEST_CASE("identity graph mixes to the plain sum") {
  const RelationalGraph g = identity_graph(4);
  CHECK_EQ(g.n_agents, 4);
  CHECK(g.weights == Eigen::MatrixXd::Identity(4, 4));
  CHECK_EQ(team_q(g, qvec(1, 2, 3, 4)), 10.0);
  CHECK(column_significance(g) == Eigen::VectorXd::Ones(4));

  // Exact agreement with a left-to-right sequential sum for arbitrary q.
  Rng rng(stream_key(5, "identity-sum"));
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd q(4);
    for (int i = 0; i < 4; ++i) q[i] = rng.uniform(-10.0, 10.0);
    double expected = 0.0;
    for (int i = 0; i < 4; ++i) expected += 1.0 * q[i];
    CHECK_EQ(team_q(g, q), expected);
  }
}

TEST_CASE("single-edge and complete graphs mix as hand sums") {
  RelationalGraph single;
  single.n_agents = 4;
  single.weights = Eigen::MatrixXd::Zero(4, 4);
  single.weights(1, 2) = 0.5;  // agent 1 attributes half significance to agent 2
  CHECK_EQ(team_q(single, qvec(1, 2, 3, 4)), 1.5);

  RelationalGraph one_edge;
  one_edge.n_agents = 4;
  one_edge.weights = Eigen::MatrixXd::Zero(4, 4);
  one_edge.weights(0, 1) = 0.5;
  CHECK_EQ(team_q(one_edge, qvec(1, 2, 3, 4)), 1.0);

  RelationalGraph complete;
  complete.n_agents = 4;
  complete.weights = Eigen::MatrixXd::Constant(4, 4, 0.25);
  // Every agent receives total incoming weight 1, so the mix is the sum.
  CHECK_EQ(team_q(complete, qvec(1, 2, 3, 4)), 10.0);
}

TEST_CASE("team_q is linear in the per-agent values") {
  Rng rng(stream_key(9, "linear"));
  RelationalGraph g;
  g.n_agents = 4;
  g.weights = Eigen::MatrixXd::Zero(4, 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) g.weights(i, j) = rng.uniform(0.0, 1.0);
  }
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd qa(4), qb(4);
    for (int i = 0; i < 4; ++i) {
      qa[i] = rng.uniform(-5.0, 5.0);
      qb[i] = rng.uniform(-5.0, 5.0);
    }
    const double alpha = rng.uniform(-2.0, 2.0);
    const double beta = rng.uniform(-2.0, 2.0);
    const double mixed = team_q(g, (alpha * qa + beta * qb).eval());
    const double split = alpha * team_q(g, qa) + beta * team_q(g, qb);
    CHECK(mixed == doctest::Approx(split).epsilon(1e-12));
  }
}

TEST_CASE("column significance is the gradient of the mix") {
  Rng rng(stream_key(13, "grad"));
  RelationalGraph g;
  g.n_agents = 4;
  g.weights = Eigen::MatrixXd::Zero(4, 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) g.weights(i, j) = rng.uniform(0.0, 1.0);
  }
  const Eigen::VectorXd sig = column_significance(g);
  Eigen::VectorXd q(4);
  for (int i = 0; i < 4; ++i) q[i] = rng.uniform(-3.0, 3.0);
  const double h = 1e-6;
  for (int j = 0; j < 4; ++j) {
    double colsum = 0.0;
    for (int i = 0; i < 4; ++i) colsum += g.weights(i, j);
    CHECK_EQ(sig[j], colsum);

    Eigen::VectorXd up = q, down = q;
    up[j] += h;
    down[j] -= h;
    const double fd = (team_q(g, up) - team_q(g, down)) / (2.0 * h);
    CHECK(sig[j] == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("malfunction_adjust zeroes exactly the failed column") {
  const RelationalGraph g = identity_graph(4);
  const RelationalGraph adj = malfunction_adjust(g, 2);
  CHECK(adj.weights.col(2).isZero(0.0));
  CHECK_EQ(adj.weights(0, 0), 1.0);
  CHECK_EQ(adj.weights(1, 1), 1.0);
  CHECK_EQ(adj.weights(3, 3), 1.0);
  CHECK_EQ(column_significance(adj)[2], 0.0);

  // Adjusting an already-zero column changes nothing.
  const RelationalGraph twice = malfunction_adjust(adj, 2);
  CHECK(twice.weights == adj.weights);

  // Uniform complete graph: dropping agent 0 with q = (5,1,1,1) removes a
  // contribution of exactly its column sum 1.0 times 5.
  RelationalGraph complete;
  complete.n_agents = 4;
  complete.weights = Eigen::MatrixXd::Constant(4, 4, 0.25);
  const double before = team_q(complete, qvec(5, 1, 1, 1));
  const double after = team_q(malfunction_adjust(complete, 0), qvec(5, 1, 1, 1));
  CHECK_EQ(before - after, 5.0);

  CHECK_THROWS_AS(malfunction_adjust(g, 4), std::out_of_range);
  CHECK_THROWS_AS(malfunction_adjust(g, -1), std::out_of_range);
}

TEST_CASE("after adjustment the mix ignores the failed agent entirely") {
  Rng rng(stream_key(17, "ignore"));
  RelationalGraph g;
  g.n_agents = 4;
  g.weights = Eigen::MatrixXd::Zero(4, 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) g.weights(i, j) = rng.uniform(0.0, 1.0);
  }
  const RelationalGraph adj = malfunction_adjust(g, 1);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd q(4);
    for (int i = 0; i < 4; ++i) q[i] = rng.uniform(-5.0, 5.0);
    Eigen::VectorXd q2 = q;
    q2[1] = rng.uniform(-1000.0, 1000.0);
    // Bitwise equality: the zero column multiplies into an exact zero term.
    CHECK_EQ(team_q(adj, q), team_q(adj, q2));
  }
}

TEST_CASE("validation reports the first violated invariant with indices") {
  CHECK_FALSE(validate(identity_graph(4)).has_value());

  RelationalGraph high = identity_graph(4);
  high.weights(0, 1) = 1.2;
  auto err = validate(high);
  REQUIRE(err.has_value());
  CHECK(err->find("(0,1)") != std::string::npos);
  CHECK(err->find("outside [0, 1]") != std::string::npos);

  RelationalGraph negative = identity_graph(4);
  negative.weights(2, 3) = -0.25;
  err = validate(negative);
  REQUIRE(err.has_value());
  CHECK(err->find("(2,3)") != std::string::npos);

  RelationalGraph nan_graph = identity_graph(2);
  nan_graph.weights(1, 0) = std::numeric_limits<double>::quiet_NaN();
  err = validate(nan_graph);
  REQUIRE(err.has_value());
  CHECK(err->find("not finite") != std::string::npos);

  RelationalGraph misshapen;
  misshapen.n_agents = 3;
  misshapen.weights = Eigen::MatrixXd::Zero(2, 3);
  CHECK(validate(misshapen).has_value());

  RelationalGraph empty;
  empty.n_agents = 0;
  CHECK(validate(empty).has_value());
}

TEST_CASE("graph JSON files round-trip exactly") {
  RelationalGraph g;
  g.n_agents = 3;
  g.weights = Eigen::MatrixXd::Zero(3, 3);
  g.weights(0, 0) = 1.0;
  g.weights(0, 1) = 1.0 / 3.0;  // needs all 17 digits to survive
  g.weights(1, 2) = 0.1;
  g.weights(2, 0) = 0.625;

  const std::string path = "relational_test_roundtrip.json";
  save_graph_json(g, path);
  const RelationalGraph loaded = load_graph_json(path);
  std::remove(path.c_str());
  CHECK_EQ(loaded.n_agents, 3);
  CHECK(loaded.weights == g.weights);
}

TEST_CASE("graph loading rejects malformed files with the path in the message") {
  CHECK_THROWS_WITH_AS(load_graph_json("no_such_graph.json"),
                       doctest::Contains("cannot open"), std::runtime_error);

  const std::string bad_json = "relational_test_bad.json";
  {
    std::ofstream out(bad_json);
    out << "{ not json";
  }
  CHECK_THROWS_WITH_AS(load_graph_json(bad_json),
                       doctest::Contains("not valid JSON"), std::runtime_error);
  std::remove(bad_json.c_str());

  const std::string missing_key = "relational_test_missing.json";
  {
    std::ofstream out(missing_key);
    out << "{\"weights\": [[1.0]]}";
  }
  CHECK_THROWS_AS(load_graph_json(missing_key), std::runtime_error);
  std::remove(missing_key.c_str());

  const std::string ragged = "relational_test_ragged.json";
  {
    std::ofstream out(ragged);
    out << "{\"n_agents\": 2, \"weights\": [[1.0, 0.0], [1.0]]}";
  }
  CHECK_THROWS_WITH_AS(load_graph_json(ragged), doctest::Contains("row 1"),
                       std::runtime_error);
  std::remove(ragged.c_str());

  const std::string out_of_range = "relational_test_range.json";
  {
    std::ofstream out(out_of_range);
    out << "{\"n_agents\": 2, \"weights\": [[1.0, 2.0], [0.0, 1.0]]}";
  }
  CHECK_THROWS_WITH_AS(load_graph_json(out_of_range),
                       doctest::Contains("outside [0, 1]"), std::runtime_error);
  std::remove(out_of_range.c_str());
}

TEST_CASE("team_q rejects mismatched value vectors") {
  const RelationalGraph g = identity_graph(4);
  CHECK_THROWS_AS(team_q(g, Eigen::VectorXd::Zero(3)), std::invalid_argument);
}
