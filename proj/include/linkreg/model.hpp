#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <optional>
#include <span>
#include <string>

namespace linkreg {

// Design matrices are stored one record per row.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Regression coefficient vector; entry 0 is the intercept.
class Coefficients {
 public:
  explicit Coefficients(Eigen::VectorXd values);
  static Coefficients zeros(Eigen::Index p);

  Eigen::Index size() const noexcept { return values_.size(); }
  double operator[](Eigen::Index k) const { return values_[k]; }
  const Eigen::VectorXd& values() const noexcept { return values_; }

  friend bool operator==(const Coefficients& a, const Coefficients& b) {
    return a.values_.size() == b.values_.size() && a.values_ == b.values_;
  }

 private:
  Eigen::VectorXd values_;
};

/// One covariate vector. The first entry is the intercept column and is exactly 1.
class Covariates {
 public:
  explicit Covariates(Eigen::VectorXd values);

  Eigen::Index size() const noexcept { return values_.size(); }
  double operator[](Eigen::Index k) const { return values_[k]; }
  const Eigen::VectorXd& values() const noexcept { return values_; }

  friend bool operator==(const Covariates& a, const Covariates& b) {
    return a.values_.size() == b.values_.size() && a.values_ == b.values_;
  }

 private:
  Eigen::VectorXd values_;
};

// exp(t)/(1+exp(t)) without overflow for any finite t, kept strictly inside
// (0, 1): values that would round to 0 or 1 are held at the nearest
// representable interior point.
inline double logistic(double t) noexcept {
  constexpr double upper = 1.0 - 0x1.0p-53;
  constexpr double lower = std::numeric_limits<double>::denorm_min();
  if (t >= 0.0) {
    return std::min(1.0 / (1.0 + std::exp(-t)), upper);
  }
  const double e = std::exp(t);
  return std::max(e / (1.0 + e), lower);
}

double mu(const Coefficients& beta, const Covariates& x);

struct LabeledRow {
  Covariates x;
  int y = 0;
};

/// Sum over rows of x (y - mu(beta, x)).
Eigen::VectorXd classical_score(std::span<const LabeledRow> rows, const Coefficients& beta);

struct SolverOptions {
  int max_iterations = 100;
  double step_tolerance = 1e-10;
  int max_step_halvings = 30;

  void validate() const;
};

struct FitResult {
  Coefficients beta = Coefficients::zeros(1);
  bool converged = false;
  // Accepted Newton updates; the final sub-tolerance confirming step is not counted.
  int iterations = 0;
  // Infinity norm of the (averaged) estimating function at beta.
  double final_score_norm = 0.0;
  std::optional<Eigen::MatrixXd> covariance;
};

using ScoreFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/// Newton-Raphson with step halving on the score's Euclidean norm.
///
/// Converged means the last Newton step and the final score both have infinity
/// norm <= step_tolerance. When max_iterations is exhausted, or no halved step
/// reduces the score norm, the current (best) iterate is returned with
/// converged = false. Throws SingularJacobianError when the Jacobian's
/// reciprocal condition estimate drops below 1e-14, and DivergenceError on a
/// non-finite score at the starting point or a non-finite Newton step.
FitResult newton_solve(const ScoreFn& score_fn, const JacobianFn& jacobian_fn,
                       const Coefficients& init, const SolverOptions& opts = {});

}  // namespace linkreg
