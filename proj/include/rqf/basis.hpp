#pragma once

#include <Eigen/Core>

namespace rqf {

// Polynomial basis over a continuous action space: every monomial of total
// degree <= order in action_dim variables, enumerated in graded
// lexicographic order (ascending total degree, ties broken
// lexicographically on the exponent tuple). Term 0 is always the constant.
//
// A state's Q-function is then q(a) = dot(coeffs, features(a)) with the
// coefficient vector produced by a network, so evaluating many candidate
// actions reduces to one matrix product against feature_matrix.
class BasisSpec {
 public:
  // order >= 1, action_dim >= 1; throws std::invalid_argument otherwise.
  BasisSpec(int order, int action_dim);

  int order() const { return order_; }
  int action_dim() const { return action_dim_; }

  // binomial(order + action_dim, action_dim)
  int num_terms() const { return static_cast<int>(exponents_.rows()); }

  // num_terms x action_dim; row k holds the exponent tuple of term k.
  const Eigen::MatrixXi& exponents() const { return exponents_; }

 private:
  int order_;
  int action_dim_;
  Eigen::MatrixXi exponents_;
};

long long binomial(int n, int k);

// phi(a): entry k = prod_j a[j]^e(k,j). action must have length action_dim.
Eigen::VectorXd features(const BasisSpec& spec,
                         const Eigen::Ref<const Eigen::VectorXd>& action);

// actions is action_dim x m; column k of the result is features(actions.col(k)).
Eigen::MatrixXd feature_matrix(const BasisSpec& spec,
                               const Eigen::Ref<const Eigen::MatrixXd>& actions);

}  // namespace rqf
