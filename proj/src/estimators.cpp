#include "linkreg/estimators.hpp"

#include "linkreg/errors.hpp"
#include "linkreg/inference.hpp"

#include <string>

namespace linkreg {

std::string_view to_string(EstimatorKind kind) noexcept {
  switch (kind) {
    case EstimatorKind::oracle:
      return "oracle";
    case EstimatorKind::naive:
      return "naive";
    case EstimatorKind::chipperfield:
      return "chipperfield";
    case EstimatorKind::optimal:
      return "optimal";
  }
  return "unknown";
}

EstimatorKind parse_estimator_kind(std::string_view name) {
  if (name == "oracle") return EstimatorKind::oracle;
  if (name == "naive") return EstimatorKind::naive;
  if (name == "chipperfield") return EstimatorKind::chipperfield;
  if (name == "optimal" || name == "optimal-two-step") return EstimatorKind::optimal;
  throw ConfigError("unknown estimator '" + std::string(name) +
                    "' (expected oracle, naive, chipperfield or optimal)");
}

namespace {

std::vector<double> column(const std::vector<std::int8_t>& v) { return {v.begin(), v.end()}; }

FitResult with_covariance(const EstimatingEquation& eq, FitResult fit) {
  if (fit.converged) {
    fit.covariance = sandwich(eq, fit).covariance;
  }
  return fit;
}

// Maps each dataset level to its row in the table's level list.
std::vector<std::size_t> table_levels_for(const CovariateLevels& data_levels,
                                          const CovariateLevels& table_levels) {
  std::vector<std::size_t> out(data_levels.size());
  for (std::size_t l = 0; l < data_levels.size(); ++l) {
    const auto k = table_levels.find(data_levels.level(l));
    if (!k) {
      throw DataIntegrityError("match probability table has no level " +
                               describe_level(data_levels.level(l)));
    }
    out[l] = *k;
  }
  return out;
}

}  // namespace

EstimatingEquation oracle_equation(const LinkedDataset& ds, Execution exec) {
  const auto& yl = ds.y_latent_column();
  for (std::size_t i = 0; i < yl.size(); ++i) {
    if (yl[i] < 0) {
      throw DataIntegrityError("oracle estimator needs the true response; record " +
                               std::to_string(i) + " has none");
    }
  }
  return EstimatingEquation(ds.design(), column(yl),
                            std::vector<double>(static_cast<std::size_t>(ds.size()), 1.0), exec);
}

EstimatingEquation naive_equation(const LinkedDataset& ds, Execution exec) {
  return EstimatingEquation(ds.design(), column(ds.y_star_column()),
                            std::vector<double>(static_cast<std::size_t>(ds.size()), 1.0), exec);
}

EstimatingEquation chipperfield_equation(const LinkedDataset& ds, const MatchProbTable& table,
                                         Execution exec) {
  return EstimatingEquation(ds.design(), column(ds.y_star_column()), record_weights(ds, table),
                            exec);
}

FitResult fit_oracle(const LinkedDataset& ds, const FitOptions& opts) {
  const auto eq = oracle_equation(ds, opts.exec);
  return with_covariance(eq, eq.solve(Coefficients::zeros(ds.dim()), opts.solver));
}

FitResult fit_naive(const LinkedDataset& ds, const FitOptions& opts) {
  const auto eq = naive_equation(ds, opts.exec);
  return with_covariance(eq, eq.solve(Coefficients::zeros(ds.dim()), opts.solver));
}

FitResult fit_chipperfield(const LinkedDataset& ds, const MatchProbTable& table,
                           const FitOptions& opts) {
  const auto eq = chipperfield_equation(ds, table, opts.exec);
  return with_covariance(eq, eq.solve(Coefficients::zeros(ds.dim()), opts.solver));
}

double h_value(const LinkedRecord& record, const MatchProbTable& table, const Coefficients& beta) {
  double w = 0.0;
  if (record.r == 1) {
    if (!record.d) {
      throw DataIntegrityError("reviewed record has no match status");
    }
    w = *record.d;
  } else {
    const auto level = table.levels().find(record.x.values());
    if (!level) {
      throw DataIntegrityError("match probability table has no level " +
                               describe_level(record.x.values()));
    }
    w = table.p_hat(*level, record.y_star);
  }
  return w * (record.y_star - mu(beta, record.x));
}

MarginalMatchProb::MarginalMatchProb(CovariateLevels levels, std::vector<double> values)
    : levels_(std::move(levels)), values_(std::move(values)) {
  if (values_.size() != levels_.size()) {
    throw DimensionError("marginal match probabilities: one value per level required");
  }
}

double MarginalMatchProb::at(const Eigen::VectorXd& x) const {
  const auto k = levels_.find(x);
  if (!k) {
    throw DataIntegrityError("no marginal match probability for level " + describe_level(x));
  }
  return values_[*k];
}

MarginalMatchProb marginal_match_prob(const LinkedDataset& ds, const MatchProbTable& table) {
  auto levels = CovariateLevels::from_design(ds.design());
  const auto row_level = levels.assign(ds.design());
  const auto tl = table_levels_for(levels, table.levels());

  std::vector<std::array<std::size_t, 2>> counts(levels.size(), {0, 0});
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    ++counts[row_level[static_cast<std::size_t>(i)]][static_cast<std::size_t>(ds.y_star(i))];
  }
  std::vector<double> values(levels.size());
  for (std::size_t l = 0; l < levels.size(); ++l) {
    if (const auto analytic = table.level_match_prob(tl[l])) {
      values[l] = *analytic;
      continue;
    }
    const double total = static_cast<double>(counts[l][0] + counts[l][1]);
    double v = 0.0;
    for (int y = 0; y <= 1; ++y) {
      const auto c = counts[l][static_cast<std::size_t>(y)];
      if (c > 0) {
        v += table.p_hat(tl[l], y) * static_cast<double>(c) / total;
      }
    }
    values[l] = v;
  }
  return MarginalMatchProb(std::move(levels), std::move(values));
}

double optimal_scale(double mean, double match_prob_x, double moment_x,
                     double review_probability) {
  const double a = mean * (1.0 - mean) * match_prob_x;
  // p a + (1-p) m, written so that m == a or p == 1 gives exactly a.
  const double den = a + (1.0 - review_probability) * (moment_x - a);
  if (!(den > 1e-12)) {
    throw DegenerateCellError("optimal multiplier denominator " + std::to_string(den) +
                              " <= 1e-12 (P(D=1|x) = " + std::to_string(match_prob_x) +
                              ", m(x) = " + std::to_string(moment_x) + ")");
  }
  return a / den;
}

Eigen::VectorXd optimal_weight(const LinkedRecord& record, const MarginalMatchProb& match_prob_x,
                               const ResidualMomentTable& moments, double review_probability,
                               const Coefficients& beta) {
  const Eigen::VectorXd& x = record.x.values();
  double s = 0.0;
  try {
    s = optimal_scale(mu(beta, record.x), match_prob_x.at(x), moments.m_hat(x),
                      review_probability);
  } catch (const DegenerateCellError& e) {
    throw DegenerateCellError(std::string(e.what()) + " at covariate level " + describe_level(x));
  }
  return -s * x;
}

EstimatingEquation optimal_equation(const LinkedDataset& ds, const MatchProbTable& table,
                                    const ResidualMomentTable& moments,
                                    const MarginalMatchProb& match_prob_x,
                                    double review_probability, const Coefficients& frozen,
                                    Execution exec) {
  if (!(review_probability > 0.0 && review_probability <= 1.0)) {
    throw ConfigError("review probability must lie in (0, 1] for the optimal estimator");
  }
  if (frozen.size() != ds.dim()) {
    throw DimensionError("optimal equation: frozen coefficients dimension mismatch");
  }
  const auto levels = CovariateLevels::from_design(ds.design());
  const auto row_level = levels.assign(ds.design());
  std::vector<double> scale(levels.size());
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const Eigen::VectorXd& x = levels.level(l);
    try {
      scale[l] = optimal_scale(logistic(x.dot(frozen.values())), match_prob_x.at(x),
                               moments.m_hat(x), review_probability);
    } catch (const DegenerateCellError& e) {
      throw DegenerateCellError(std::string(e.what()) + " at covariate level " + describe_level(x));
    }
  }
  std::vector<double> w = record_weights(ds, table);
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] *= -scale[row_level[i]];
  }
  return EstimatingEquation(ds.design(), column(ds.y_star_column()), std::move(w), exec);
}

TwoStepResult fit_optimal_two_step(const LinkedDataset& ds, const TwoStepOptions& two_step,
                                   const FitOptions& opts,
                                   const std::optional<MatchProbTable>& table) {
  if (!(two_step.review_probability > 0.0 && two_step.review_probability <= 1.0)) {
    throw ConfigError("review probability must lie in (0, 1] for the optimal estimator");
  }
  if (two_step.extra_iterations < 0) {
    throw ConfigError("extra_iterations must be nonnegative");
  }
  MatchProbTable tab = table ? *table : estimate_match_prob(ds, two_step.fallback);
  FitResult first = fit_chipperfield(ds, tab, opts);
  ResidualMomentTable moments = estimate_residual_moment(ds, tab, first.beta);
  if (!first.converged) {
    return TwoStepResult{first, first, std::move(tab), std::move(moments), first.beta};
  }
  const MarginalMatchProb pd = marginal_match_prob(ds, tab);

  FitResult current = first;
  FitResult fit;
  Coefficients frozen = first.beta;
  for (int pass = 0; pass <= two_step.extra_iterations; ++pass) {
    if (pass > 0) {
      moments = estimate_residual_moment(ds, tab, current.beta);
    }
    frozen = current.beta;
    const auto eq = optimal_equation(ds, tab, moments, pd, two_step.review_probability, frozen,
                                     opts.exec);
    fit = with_covariance(eq, eq.solve(current.beta, opts.solver));
    if (!fit.converged) {
      break;
    }
    current = fit;
  }
  return TwoStepResult{std::move(fit), std::move(first), std::move(tab), std::move(moments),
                       std::move(frozen)};
}

}  // namespace linkreg
