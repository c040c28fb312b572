#pragma once

#include "linkreg/kernels.hpp"
#include "linkreg/model.hpp"

#include <vector>

namespace linkreg {

/// Averaged estimating function n^-1 sum_i c_i x_i (y_i - mu_i(beta)) with fixed
/// record weights c_i. Every estimator in the library is one of these; they
/// differ only in the response (y or y*) and the weights.
///
/// Holds a reference to the design matrix, which must outlive the equation.
class EstimatingEquation {
 public:
  EstimatingEquation(const RowMatrix& design, std::vector<double> response,
                     std::vector<double> weight, Execution exec = Execution::parallel);

  Eigen::Index size() const noexcept { return design_->rows(); }
  Eigen::Index dim() const noexcept { return design_->cols(); }

  Eigen::VectorXd score(const Eigen::VectorXd& beta) const;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& beta) const;
  /// n^-1 sum_i G_i G_i^T.
  Eigen::MatrixXd outer(const Eigen::VectorXd& beta) const;
  /// Per-record contributions G_i as rows of an n x p matrix.
  Eigen::MatrixXd contributions(const Eigen::VectorXd& beta) const;

  const std::vector<double>& response() const noexcept { return response_; }
  const std::vector<double>& weight() const noexcept { return weight_; }
  const RowMatrix& design() const noexcept { return *design_; }

  FitResult solve(const Coefficients& init, const SolverOptions& opts) const;

 private:
  WeightedTerms terms() const { return {*design_, response_, weight_}; }

  const RowMatrix* design_;
  std::vector<double> response_;
  std::vector<double> weight_;
  Execution exec_;
};

}  // namespace linkreg
