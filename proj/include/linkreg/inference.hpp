#pragma once

#include "linkreg/equation.hpp"
#include "linkreg/kernels.hpp"
#include "linkreg/linkage_sim.hpp"
#include "linkreg/model.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>

namespace linkreg {

struct SandwichEstimate {
  Eigen::MatrixXd bread;       // n^-1 sum dG_i/dbeta^T
  Eigen::MatrixXd meat;        // n^-1 sum G_i G_i^T
  Eigen::MatrixXd covariance;  // n^-1 bread^-1 meat bread^-T, symmetrized
};

/// Sandwich covariance at a converged fit. Throws NumericalError if the fit did
/// not converge or the bread is singular.
SandwichEstimate sandwich(const EstimatingEquation& eq, const FitResult& fit);
SandwichEstimate sandwich_at(const EstimatingEquation& eq, const Eigen::VectorXd& beta);

struct DefinitenessCheck {
  bool positive_definite = false;
  double min_eigenvalue = 0.0;
};

/// Smallest eigenvalue of (m + m^T)/2 against tol; the default tolerance is
/// 1e-9 (1 + ||m||_F).
DefinitenessCheck check_positive_definite(const Eigen::MatrixXd& m,
                                          std::optional<double> tol = std::nullopt);

/// E[-dS_i/dbeta^T] and E[S_i S_i^T] for the known-probability Chipperfield
/// score S_i = x_i {r d + (1 - r) P(D = 1 | x, y*)} (y* - mu_i(beta)).
struct ScoreMoments {
  Eigen::MatrixXd lhs;
  Eigen::MatrixXd rhs;
  Eigen::MatrixXd gap() const { return lhs - rhs; }
};

/// Exact moments by enumerating every (x, r, d, y*) outcome of the generator.
ScoreMoments enumerate_score_moments(const ScenarioConfig& config, const Coefficients& beta);

/// The two-term form of lhs - rhs at the generating coefficients:
/// (1-p) E[P(D=1|X) mu(1-mu) XX^T] - (1-p) E[P(D=1|X,Y*)^2 (Y*-mu)^2 XX^T].
Eigen::MatrixXd two_term_gap(const ScenarioConfig& config);

/// Null slopes, a constant match probability lambda that does not vary with y*,
/// P(Y* = 1) = phi at every level, and E[XX^T] positive definite. Returns
/// nullopt when all hold, else a description of the first failed condition.
std::optional<std::string> closed_form_violation(const ScenarioConfig& config,
                                                 const Coefficients& beta);

/// (1 - p) phi (1 - phi) lambda (1 - lambda) E[XX^T]; throws ConfigError if
/// closed_form_violation reports a failed condition.
Eigen::MatrixXd closed_form_gap(const ScenarioConfig& config, const Coefficients& beta);

struct GapReport {
  std::size_t n_mc = 0;
  Eigen::MatrixXd empirical_lhs;
  Eigen::MatrixXd empirical_rhs;
  Eigen::MatrixXd gap;
  Eigen::MatrixXd gap_standard_error;  // entrywise Monte Carlo SE of gap
  Eigen::MatrixXd enumerated_gap;      // exact, from enumerate_score_moments
  std::optional<Eigen::MatrixXd> closed_form_gap;
  std::optional<std::string> closed_form_unavailable;
  double min_eigenvalue = 0.0;
  bool positive_definite = false;
};

struct AuditOptions {
  bool require_closed_form = false;
  Execution exec = Execution::parallel;
};

/// Simulates n_mc records from `generator` (its seed, n replaced by n_mc) and
/// estimates both sides of the score identity at `beta` using the oracle
/// conditional match probabilities.
GapReport score_identity_audit(const ScenarioConfig& generator, const Coefficients& beta,
                               std::size_t n_mc, const AuditOptions& opts = {});

}  // namespace linkreg
