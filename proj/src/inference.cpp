#include "linkreg/inference.hpp"

#include "linkreg/errors.hpp"
#include "linkreg/match_prob.hpp"

#include <cmath>
#include <string>

namespace linkreg {

SandwichEstimate sandwich_at(const EstimatingEquation& eq, const Eigen::VectorXd& beta) {
  SandwichEstimate out;
  out.bread = eq.jacobian(beta);
  out.meat = eq.outer(beta);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(out.bread);
  if (!lu.isInvertible() || !(lu.rcond() >= 1e-14)) {
    throw NumericalError("sandwich: singular bread matrix");
  }
  const Eigen::MatrixXd inv = lu.inverse();
  Eigen::MatrixXd cov = inv * out.meat * inv.transpose() / static_cast<double>(eq.size());
  out.covariance = 0.5 * (cov + cov.transpose());
  return out;
}

SandwichEstimate sandwich(const EstimatingEquation& eq, const FitResult& fit) {
  if (!fit.converged) {
    throw NumericalError("sandwich: the fit did not converge");
  }
  return sandwich_at(eq, fit.beta.values());
}

DefinitenessCheck check_positive_definite(const Eigen::MatrixXd& m, std::optional<double> tol) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw DimensionError("check_positive_definite: matrix must be square and nonempty");
  }
  if (!m.allFinite()) {
    throw NumericalError("check_positive_definite: non-finite entries");
  }
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  const double min_eig = eig.eigenvalues().minCoeff();
  const double threshold = tol.value_or(1e-9 * (1.0 + sym.norm()));
  return {min_eig > threshold, min_eig};
}

ScoreMoments enumerate_score_moments(const ScenarioConfig& config, const Coefficients& beta) {
  config.validate();
  if (beta.size() != static_cast<Eigen::Index>(config.dim())) {
    throw DimensionError("enumerate_score_moments: beta dimension mismatch");
  }
  const auto p = beta.size();
  ScoreMoments out{Eigen::MatrixXd::Zero(p, p), Eigen::MatrixXd::Zero(p, p)};
  const double review = config.review_probability;
  for (std::size_t l = 0; l < config.covariate_levels.size(); ++l) {
    const auto& lvl = config.covariate_levels[l];
    const Eigen::VectorXd& x = lvl.x.values();
    const Eigen::MatrixXd xx = x * x.transpose();
    const double m = logistic(x.dot(beta.values()));
    const double lambda = config.match_probability(l);
    const double y_rate[2] = {config.mismatch_rate(l), config.mean(l)};  // indexed by d
    for (int r = 0; r <= 1; ++r) {
      const double pr = r ? review : 1.0 - review;
      for (int d = 0; d <= 1; ++d) {
        const double pd = d ? lambda : 1.0 - lambda;
        for (int y = 0; y <= 1; ++y) {
          const double py = y ? y_rate[d] : 1.0 - y_rate[d];
          const double prob = lvl.weight * pr * pd * py;
          if (prob == 0.0) {
            continue;
          }
          const double c = r ? static_cast<double>(d) : true_match_prob(config, x, y);
          out.lhs += prob * c * m * (1.0 - m) * xx;
          out.rhs += prob * c * c * (y - m) * (y - m) * xx;
        }
      }
    }
  }
  return out;
}

Eigen::MatrixXd two_term_gap(const ScenarioConfig& config) {
  config.validate();
  const auto p = static_cast<Eigen::Index>(config.dim());
  Eigen::MatrixXd gap = Eigen::MatrixXd::Zero(p, p);
  const double unreviewed = 1.0 - config.review_probability;
  for (std::size_t l = 0; l < config.covariate_levels.size(); ++l) {
    const auto& lvl = config.covariate_levels[l];
    const Eigen::VectorXd& x = lvl.x.values();
    const double m = config.mean(l);
    const double lambda = config.match_probability(l);
    const double p_y1 = lambda * m + (1.0 - lambda) * config.mismatch_rate(l);
    double moment = 0.0;
    for (int y = 0; y <= 1; ++y) {
      const double py = y ? p_y1 : 1.0 - p_y1;
      if (py == 0.0) {
        continue;
      }
      const double pdy = true_match_prob(config, x, y);
      moment += py * pdy * pdy * (y - m) * (y - m);
    }
    gap += lvl.weight * unreviewed * (lambda * m * (1.0 - m) - moment) * (x * x.transpose());
  }
  return gap;
}

namespace {

Eigen::MatrixXd design_second_moment(const ScenarioConfig& config) {
  const auto p = static_cast<Eigen::Index>(config.dim());
  Eigen::MatrixXd exx = Eigen::MatrixXd::Zero(p, p);
  for (const auto& lvl : config.covariate_levels) {
    exx += lvl.weight * lvl.x.values() * lvl.x.values().transpose();
  }
  return exx;
}

}  // namespace

std::optional<std::string> closed_form_violation(const ScenarioConfig& config,
                                                 const Coefficients& beta) {
  config.validate();
  if (!(beta == config.beta_true)) {
    return "the closed form holds at the generating coefficients only";
  }
  for (Eigen::Index k = 1; k < beta.size(); ++k) {
    if (beta[k] != 0.0) {
      return "slopes must be zero (condition ii)";
    }
  }
  const double lambda = config.match_probability(0);
  for (std::size_t l = 1; l < config.covariate_levels.size(); ++l) {
    if (config.match_probability(l) != lambda) {
      return "the match probability must not vary with x (condition i)";
    }
  }
  const double phi = logistic(beta[0]);
  for (std::size_t l = 0; l < config.covariate_levels.size(); ++l) {
    const double p_y1 = lambda * phi + (1.0 - lambda) * config.mismatch_rate(l);
    if (std::abs(p_y1 - phi) > 1e-12) {
      return "P(Y* = 1 | x) must equal phi at every level (conditions i, iii)";
    }
  }
  if (!check_positive_definite(design_second_moment(config)).positive_definite) {
    return "E[XX^T] must be positive definite (condition v)";
  }
  return std::nullopt;
}

Eigen::MatrixXd closed_form_gap(const ScenarioConfig& config, const Coefficients& beta) {
  if (auto why = closed_form_violation(config, beta)) {
    throw ConfigError("closed-form score-identity gap unavailable: " + *why);
  }
  const double lambda = config.match_probability(0);
  const double phi = logistic(beta[0]);
  return (1.0 - config.review_probability) * phi * (1.0 - phi) * (lambda - lambda * lambda) *
         design_second_moment(config);
}

GapReport score_identity_audit(const ScenarioConfig& generator, const Coefficients& beta,
                               std::size_t n_mc, const AuditOptions& opts) {
  if (n_mc < 2) {
    throw ConfigError("score identity audit needs n_mc >= 2");
  }
  ScenarioConfig config = generator;
  config.n = n_mc;
  config.validate();
  if (beta.size() != static_cast<Eigen::Index>(config.dim())) {
    throw DimensionError("score identity audit: beta dimension mismatch");
  }

  GapReport report;
  report.n_mc = n_mc;
  report.enumerated_gap = enumerate_score_moments(config, beta).gap();
  report.closed_form_unavailable = closed_form_violation(config, beta);
  if (report.closed_form_unavailable && opts.require_closed_form) {
    throw ConfigError("closed-form score-identity gap unavailable: " +
                      *report.closed_form_unavailable);
  }
  if (!report.closed_form_unavailable) {
    report.closed_form_gap = closed_form_gap(config, beta);
  }

  const LinkedDataset ds = generate(config, opts.exec);
  const std::vector<double> w = record_weights(ds, oracle_table(config));
  const RowMatrix& X = ds.design();
  const auto p = X.cols();

  struct Acc {
    Eigen::MatrixXd lhs, rhs, gap, gap_sq;
  };
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(p, p);
  const Acc sums = blocked_reduce(
      ds.size(), Acc{zero, zero, zero, zero},
      [&](Acc& acc, Eigen::Index begin, Eigen::Index end) {
        for (Eigen::Index i = begin; i < end; ++i) {
          const auto x = X.row(i);
          const double m = logistic(x.dot(beta.values()));
          const double c = w[static_cast<std::size_t>(i)];
          const double resid = ds.y_star(i) - m;
          const double a = c * m * (1.0 - m);
          const double b = c * c * resid * resid;
          const Eigen::MatrixXd xx = x.transpose() * x;
          acc.lhs += a * xx;
          acc.rhs += b * xx;
          acc.gap += (a - b) * xx;
          acc.gap_sq += ((a - b) * xx).cwiseAbs2();
        }
      },
      [](Acc& total, const Acc& part) {
        total.lhs += part.lhs;
        total.rhs += part.rhs;
        total.gap += part.gap;
        total.gap_sq += part.gap_sq;
      },
      opts.exec);

  const double n = static_cast<double>(n_mc);
  report.empirical_lhs = sums.lhs / n;
  report.empirical_rhs = sums.rhs / n;
  report.gap = sums.gap / n;
  const Eigen::MatrixXd var =
      ((sums.gap_sq / n) - report.gap.cwiseAbs2()).cwiseMax(0.0) * (n / (n - 1.0));
  report.gap_standard_error = (var / n).cwiseSqrt();
  const auto pd = check_positive_definite(report.gap);
  report.min_eigenvalue = pd.min_eigenvalue;
  report.positive_definite = pd.positive_definite;
  return report;
}

}  // namespace linkreg
