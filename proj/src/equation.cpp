#include "linkreg/equation.hpp"

#include "linkreg/errors.hpp"

namespace linkreg {

EstimatingEquation::EstimatingEquation(const RowMatrix& design, std::vector<double> response,
                                       std::vector<double> weight, Execution exec)
    : design_(&design), response_(std::move(response)), weight_(std::move(weight)), exec_(exec) {
  const auto n = static_cast<std::size_t>(design.rows());
  if (n == 0) {
    throw DimensionError("estimating equation needs at least one record");
  }
  if (response_.size() != n || weight_.size() != n) {
    throw DimensionError("estimating equation: response/weight length does not match design");
  }
}

Eigen::VectorXd EstimatingEquation::score(const Eigen::VectorXd& beta) const {
  return weighted_score(terms(), beta, exec_) / static_cast<double>(size());
}

Eigen::MatrixXd EstimatingEquation::jacobian(const Eigen::VectorXd& beta) const {
  return weighted_jacobian(terms(), beta, exec_) / static_cast<double>(size());
}

Eigen::MatrixXd EstimatingEquation::outer(const Eigen::VectorXd& beta) const {
  return weighted_outer(terms(), beta, exec_) / static_cast<double>(size());
}

Eigen::MatrixXd EstimatingEquation::contributions(const Eigen::VectorXd& beta) const {
  if (beta.size() != dim()) {
    throw DimensionError("contributions: beta length does not match design columns");
  }
  Eigen::MatrixXd out(size(), dim());
  for (Eigen::Index i = 0; i < size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    const auto x = design_->row(i);
    out.row(i) = (weight_[k] * (response_[k] - logistic(x.dot(beta)))) * x;
  }
  return out;
}

FitResult EstimatingEquation::solve(const Coefficients& init, const SolverOptions& opts) const {
  if (init.size() != dim()) {
    throw DimensionError("initial coefficients do not match the covariate dimension");
  }
  return newton_solve([this](const Eigen::VectorXd& b) { return score(b); },
                      [this](const Eigen::VectorXd& b) { return jacobian(b); }, init, opts);
}

}  // namespace linkreg
