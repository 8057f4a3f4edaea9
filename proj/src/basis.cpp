#include "rqf/basis.hpp"

#include <stdexcept>
#include <vector>

namespace rqf {

long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  long long r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
  }
  return r;
}

namespace {

// Tuples of fixed total degree in lexicographic order: leading exponent
// ascends, remainder recurses.
void emit_degree(int degree, int dim, std::vector<int>& tuple,
                 std::vector<std::vector<int>>& out) {
  const int pos = static_cast<int>(tuple.size());
  if (pos == dim - 1) {
    tuple.push_back(degree);
    out.push_back(tuple);
    tuple.pop_back();
    return;
  }
  for (int e = 0; e <= degree; ++e) {
    tuple.push_back(e);
    emit_degree(degree - e, dim, tuple, out);
    tuple.pop_back();
  }
}

}  // namespace

BasisSpec::BasisSpec(int order, int action_dim)
    : order_(order), action_dim_(action_dim) {
  if (order < 1) throw std::invalid_argument("BasisSpec: order must be >= 1");
  if (action_dim < 1)
    throw std::invalid_argument("BasisSpec: action_dim must be >= 1");

  std::vector<std::vector<int>> tuples;
  std::vector<int> scratch;
  for (int degree = 0; degree <= order; ++degree) {
    emit_degree(degree, action_dim, scratch, tuples);
  }

  exponents_.resize(static_cast<Eigen::Index>(tuples.size()), action_dim);
  for (std::size_t k = 0; k < tuples.size(); ++k) {
    for (int j = 0; j < action_dim; ++j) {
      exponents_(static_cast<Eigen::Index>(k), j) = tuples[k][j];
    }
  }
}

Eigen::VectorXd features(const BasisSpec& spec,
                         const Eigen::Ref<const Eigen::VectorXd>& action) {
  const int d = spec.action_dim();
  if (action.size() != d) {
    throw std::invalid_argument("features: action length " +
                                std::to_string(action.size()) +
                                " does not match basis action_dim " +
                                std::to_string(d));
  }
  // powers(j, p) = action[j]^p by repeated multiplication
  Eigen::MatrixXd powers(d, spec.order() + 1);
  for (int j = 0; j < d; ++j) {
    powers(j, 0) = 1.0;
    for (int p = 1; p <= spec.order(); ++p) {
      powers(j, p) = powers(j, p - 1) * action[j];
    }
  }
  const Eigen::MatrixXi& expo = spec.exponents();
  Eigen::VectorXd out(spec.num_terms());
  for (int k = 0; k < spec.num_terms(); ++k) {
    double term = 1.0;
    for (int j = 0; j < d; ++j) {
      term *= powers(j, expo(k, j));
    }
    out[k] = term;
  }
  return out;
}

Eigen::MatrixXd feature_matrix(
    const BasisSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& actions) {
  if (actions.rows() != spec.action_dim()) {
    throw std::invalid_argument("feature_matrix: actions have " +
                                std::to_string(actions.rows()) +
                                " rows, basis action_dim is " +
                                std::to_string(spec.action_dim()));
  }
  if (actions.cols() < 1) {
    throw std::invalid_argument("feature_matrix: need at least one action");
  }
  Eigen::MatrixXd out(spec.num_terms(), actions.cols());
  for (Eigen::Index k = 0; k < actions.cols(); ++k) {
    out.col(k) = features(spec, actions.col(k));
  }
  return out;
}

}  // namespace rqf
