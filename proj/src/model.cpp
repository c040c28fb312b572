#include "linkreg/model.hpp"

#include "linkreg/errors.hpp"

#include <cmath>
#include <utility>

namespace linkreg {

namespace {

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

Coefficients::Coefficients(Eigen::VectorXd values) : values_(std::move(values)) {
  if (values_.size() < 1) {
    throw DimensionError("coefficient vector must have length >= 1");
  }
  if (!all_finite(values_)) {
    throw DimensionError("coefficient vector has non-finite entries");
  }
}

Coefficients Coefficients::zeros(Eigen::Index p) { return Coefficients(Eigen::VectorXd::Zero(p)); }

Covariates::Covariates(Eigen::VectorXd values) : values_(std::move(values)) {
  if (values_.size() < 1) {
    throw DimensionError("covariate vector must have length >= 1");
  }
  if (values_[0] != 1.0) {
    throw DimensionError("first covariate must be the intercept column 1");
  }
  if (!all_finite(values_)) {
    throw DimensionError("covariate vector has non-finite entries");
  }
}

double mu(const Coefficients& beta, const Covariates& x) {
  if (beta.size() != x.size()) {
    throw DimensionError("mu: beta has length " + std::to_string(beta.size()) +
                         " but x has length " + std::to_string(x.size()));
  }
  return logistic(x.values().dot(beta.values()));
}

Eigen::VectorXd classical_score(std::span<const LabeledRow> rows, const Coefficients& beta) {
  if (rows.empty()) {
    throw DimensionError("classical_score: empty row list");
  }
  Eigen::VectorXd score = Eigen::VectorXd::Zero(beta.size());
  for (const auto& row : rows) {
    if (row.y != 0 && row.y != 1) {
      throw DataIntegrityError("classical_score: response must be 0 or 1");
    }
    score += row.x.values() * (row.y - mu(beta, row.x));
  }
  return score;
}

void SolverOptions::validate() const {
  if (max_iterations < 1) {
    throw ConfigError("max_iterations must be positive");
  }
  if (!(step_tolerance > 0.0)) {
    throw ConfigError("step_tolerance must be positive");
  }
  if (max_step_halvings < 0) {
    throw ConfigError("max_step_halvings must be nonnegative");
  }
}

FitResult newton_solve(const ScoreFn& score_fn, const JacobianFn& jacobian_fn,
                       const Coefficients& init, const SolverOptions& opts) {
  opts.validate();
  const Eigen::Index p = init.size();

  Eigen::VectorXd beta = init.values();
  Eigen::VectorXd score = score_fn(beta);
  if (score.size() != p) {
    throw DimensionError("newton_solve: score has length " + std::to_string(score.size()) +
                         ", expected " + std::to_string(p));
  }
  if (!score.allFinite()) {
    throw DivergenceError("newton_solve: non-finite score at the initial point");
  }

  FitResult result;
  int updates = 0;
  for (;;) {
    const int it = updates + 1;
    const Eigen::MatrixXd jac = jacobian_fn(beta);
    if (jac.rows() != p || jac.cols() != p) {
      throw DimensionError("newton_solve: Jacobian is not " + std::to_string(p) + "x" +
                           std::to_string(p));
    }
    if (!jac.allFinite()) {
      throw DivergenceError("newton_solve: non-finite Jacobian at iteration " +
                            std::to_string(it));
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
    const double rcond = lu.rcond();
    if (!(rcond >= 1e-14)) {
      throw SingularJacobianError(it, rcond);
    }
    const Eigen::VectorXd step = lu.solve(-score);
    if (!step.allFinite()) {
      throw DivergenceError("newton_solve: non-finite Newton step at iteration " +
                            std::to_string(it));
    }

    // At the roundoff floor the merit function is noise; take the step as is.
    if (step.lpNorm<Eigen::Infinity>() <= opts.step_tolerance) {
      beta += step;
      score = score_fn(beta);
      if (!score.allFinite()) {
        throw DivergenceError("newton_solve: non-finite score at iteration " +
                              std::to_string(it));
      }
      result.converged = score.lpNorm<Eigen::Infinity>() <= opts.step_tolerance;
      break;
    }
    if (updates == opts.max_iterations) {
      break;
    }

    const double merit = score.norm();
    double scale = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opts.max_step_halvings; ++h, scale *= 0.5) {
      Eigen::VectorXd candidate = beta + scale * step;
      Eigen::VectorXd cand_score = score_fn(candidate);
      if (cand_score.allFinite() && cand_score.norm() < merit) {
        beta = std::move(candidate);
        score = std::move(cand_score);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      break;
    }
    ++updates;
  }

  result.iterations = updates;
  result.beta = Coefficients(beta);
  result.final_score_norm = score.lpNorm<Eigen::Infinity>();
  return result;
}

}  // namespace linkreg
