#pragma once

// Fitting procedures for logistic regression on linked data.
//
//   oracle        sum x_i (y_i - mu_i) = 0 on the true responses (simulation only)
//   naive         sum x_i (y*_i - mu_i) = 0, ignoring linkage error
//   chipperfield  sum x_i H_i = 0, H_i = {r d + (1 - r) p_hat(x, y*)} (y* - mu_i),
//                 solved directly by Newton-Raphson (no nested E-M loop)
//   optimal       sum A*_i H_i = 0 with A*_i frozen at a first-step Chipperfield fit
//
// Every fitted result carries the sandwich covariance when the solver converged.

#include "linkreg/equation.hpp"
#include "linkreg/linkage_sim.hpp"
#include "linkreg/match_prob.hpp"
#include "linkreg/model.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace linkreg {

enum class EstimatorKind { oracle, naive, chipperfield, optimal };

std::string_view to_string(EstimatorKind kind) noexcept;
EstimatorKind parse_estimator_kind(std::string_view name);

struct FitOptions {
  SolverOptions solver;
  Execution exec = Execution::parallel;
};

EstimatingEquation oracle_equation(const LinkedDataset& ds, Execution exec = Execution::parallel);
EstimatingEquation naive_equation(const LinkedDataset& ds, Execution exec = Execution::parallel);
EstimatingEquation chipperfield_equation(const LinkedDataset& ds, const MatchProbTable& table,
                                         Execution exec = Execution::parallel);

FitResult fit_oracle(const LinkedDataset& ds, const FitOptions& opts = {});
FitResult fit_naive(const LinkedDataset& ds, const FitOptions& opts = {});
FitResult fit_chipperfield(const LinkedDataset& ds, const MatchProbTable& table,
                           const FitOptions& opts = {});

/// H_i(beta) for one record. Reviewed records use their clerical d.
double h_value(const LinkedRecord& record, const MatchProbTable& table, const Coefficients& beta);

/// P(D = 1 | X = x) per covariate level of a dataset: the table's analytic value
/// when it carries one, otherwise the table averaged over the empirical y*
/// distribution at x.
class MarginalMatchProb {
 public:
  MarginalMatchProb(CovariateLevels levels, std::vector<double> values);
  double at(const Eigen::VectorXd& x) const;
  const CovariateLevels& levels() const noexcept { return levels_; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  CovariateLevels levels_;
  std::vector<double> values_;
};

MarginalMatchProb marginal_match_prob(const LinkedDataset& ds, const MatchProbTable& table);

/// Scalar s with A*_i = -s x_i:
///   s = mu(1-mu) P(D=1|x) / [p mu(1-mu) P(D=1|x) + (1-p) m(x)].
/// Throws DegenerateCellError when the denominator is <= 1e-12.
double optimal_scale(double mean, double match_prob_x, double moment_x, double review_probability);

/// A*_i for one record, with mu evaluated at beta (the frozen first-step estimate).
Eigen::VectorXd optimal_weight(const LinkedRecord& record, const MarginalMatchProb& match_prob_x,
                               const ResidualMomentTable& moments, double review_probability,
                               const Coefficients& beta);

/// sum_i A*_i H_i(beta) / n with A*_i frozen at `frozen`.
EstimatingEquation optimal_equation(const LinkedDataset& ds, const MatchProbTable& table,
                                    const ResidualMomentTable& moments,
                                    const MarginalMatchProb& match_prob_x,
                                    double review_probability, const Coefficients& frozen,
                                    Execution exec = Execution::parallel);

struct TwoStepOptions {
  double review_probability = 0.5;
  // Re-freeze A* at the latest estimate and re-solve this many extra times.
  int extra_iterations = 0;
  FallbackPolicy fallback = FallbackPolicy::hierarchical;
};

struct TwoStepResult {
  FitResult fit;
  FitResult first_step;
  MatchProbTable table;
  ResidualMomentTable moments;  // evaluated at `frozen`
  Coefficients frozen;          // where A* was frozen for the final solve
};

/// Step 0: table (estimated from the clerical sample unless supplied).
/// Step 1: Chipperfield fit. Step 1b: residual moments at the step-1 estimate.
/// Step 2: solve sum A*_i H_i = 0 with A*_i frozen. If step 1 does not
/// converge, its result is returned as the (non-converged) final fit.
TwoStepResult fit_optimal_two_step(const LinkedDataset& ds, const TwoStepOptions& two_step,
                                   const FitOptions& opts = {},
                                   const std::optional<MatchProbTable>& table = std::nullopt);

}  // namespace linkreg
