#include "linkreg/monte_carlo.hpp"

#include "linkreg/errors.hpp"
#include "linkreg/inference.hpp"
#include "linkreg/rng.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <exception>
#include <ostream>
#include <sstream>

namespace linkreg {

std::string_view to_string(TableMode mode) noexcept {
  return mode == TableMode::oracle ? "oracle" : "estimated";
}

TableMode parse_table_mode(std::string_view name) {
  if (name == "oracle") return TableMode::oracle;
  if (name == "estimated") return TableMode::estimated;
  throw ConfigError("unknown table mode '" + std::string(name) + "' (expected oracle or estimated)");
}

std::string_view to_string(TraceOutcome o) noexcept {
  switch (o) {
    case TraceOutcome::first_smaller:
      return "first_smaller";
    case TraceOutcome::second_smaller:
      return "second_smaller";
    case TraceOutcome::equivalent_within_tolerance:
      return "equivalent_within_tolerance";
    case TraceOutcome::inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

void MCConfig::validate() const {
  scenario.validate();
  solver.validate();
  if (replications < 2) {
    throw ConfigError("replications must be at least 2");
  }
  if (estimators.empty()) {
    throw ConfigError("estimator set is empty");
  }
  for (std::size_t a = 0; a < estimators.size(); ++a) {
    for (std::size_t b = a + 1; b < estimators.size(); ++b) {
      if (estimators[a] == estimators[b]) {
        throw ConfigError("estimator '" + std::string(to_string(estimators[a])) + "' listed twice");
      }
    }
  }
  const bool needs_review = std::any_of(estimators.begin(), estimators.end(), [](EstimatorKind k) {
    return k == EstimatorKind::optimal;
  });
  if (needs_review && scenario.review_probability <= 0.0) {
    throw ConfigError("the optimal estimator needs review_probability > 0");
  }
  if (extra_iterations < 0) {
    throw ConfigError("extra_iterations must be nonnegative");
  }
  if (bootstrap_resamples < 1) {
    throw ConfigError("bootstrap_resamples must be positive");
  }
  if (!(equivalence_fraction > 0.0)) {
    throw ConfigError("equivalence_fraction must be positive");
  }
}

const std::set<std::string, std::less<>>& mc_keys() {
  static const std::set<std::string, std::less<>> keys = [] {
    auto k = scenario_keys();
    k.insert({"replications", "estimators", "base_seed", "table_mode", "extra_iterations",
              "fallback", "bootstrap_resamples", "equivalence_fraction", "max_iterations",
              "step_tolerance", "max_step_halvings"});
    return k;
  }();
  return keys;
}

MCConfig parse_mc_config(const KeyValueDocument& doc) {
  doc.reject_unknown(mc_keys());
  auto value = [&doc](std::string_view key, auto&& fn, auto fallback) {
    const auto e = doc.get(key);
    if (!e) {
      return fallback;
    }
    try {
      return static_cast<decltype(fallback)>(fn(e->value));
    } catch (const ConfigError& err) {
      doc.fail(*e, err.what());
    }
  };
  const auto as_uint = [](const std::string& v) { return parse_uint(v); };
  const auto as_double = [](const std::string& v) { return parse_double(v); };

  MCConfig c;
  const auto base = doc.require("base_seed");
  try {
    c.base_seed = parse_uint(base.value);
  } catch (const ConfigError& err) {
    doc.fail(base, err.what());
  }
  c.scenario = parse_scenario(doc, c.base_seed);
  c.replications = value("replications", as_uint, std::size_t{0});
  if (!doc.get("replications")) {
    throw ConfigError(doc.source() + ": missing required key 'replications'");
  }
  const auto est = doc.require("estimators");
  try {
    for (const auto& name : split_list(est.value)) {
      c.estimators.push_back(parse_estimator_kind(name));
    }
  } catch (const ConfigError& err) {
    doc.fail(est, err.what());
  }
  c.table_mode = value(
      "table_mode", [](const std::string& v) { return parse_table_mode(v); }, TableMode::estimated);
  c.fallback = value(
      "fallback",
      [](const std::string& v) {
        if (v == "hierarchical") return FallbackPolicy::hierarchical;
        if (v == "strict") return FallbackPolicy::strict;
        throw ConfigError("fallback must be 'hierarchical' or 'strict'");
      },
      FallbackPolicy::hierarchical);
  c.extra_iterations = value("extra_iterations", as_uint, 0);
  c.bootstrap_resamples = value("bootstrap_resamples", as_uint, std::size_t{2000});
  c.equivalence_fraction = value("equivalence_fraction", as_double, 0.05);
  c.solver.max_iterations = value("max_iterations", as_uint, c.solver.max_iterations);
  c.solver.step_tolerance = value("step_tolerance", as_double, c.solver.step_tolerance);
  c.solver.max_step_halvings = value("max_step_halvings", as_uint, c.solver.max_step_halvings);
  try {
    c.validate();
  } catch (const ConfigError& err) {
    throw ConfigError(doc.source() + ": " + err.what());
  }
  return c;
}

MCConfig load_mc_config(const std::filesystem::path& path) {
  return parse_mc_config(KeyValueDocument::load(path));
}

namespace {

EstimateOutcome from_fit(const FitResult& fit) {
  EstimateOutcome out;
  out.converged = fit.converged;
  out.iterations = fit.iterations;
  if (fit.converged) {
    out.beta = fit.beta.values();
    out.covariance = fit.covariance;
  } else {
    std::ostringstream why;
    why << "not converged after " << fit.iterations << " updates (score norm "
        << fit.final_score_norm << ")";
    out.failure = why.str();
  }
  return out;
}

EstimateOutcome failed(const std::exception& e) {
  EstimateOutcome out;
  out.failure = e.what();
  return out;
}

}  // namespace

ReplicationOutcome run_replication(const MCConfig& config, std::size_t index) {
  ReplicationOutcome rep;
  rep.index = index;
  rep.seed = config.base_seed + index;
  ScenarioConfig scenario = config.scenario;
  scenario.seed = rep.seed;

  const FitOptions opts{config.solver, Execution::serial};
  const LinkedDataset full = generate(scenario, Execution::serial);
  const LinkedDataset seen = analysis_view(full);

  std::optional<MatchProbTable> table;
  std::optional<std::string> table_failure;
  const bool needs_table =
      std::any_of(config.estimators.begin(), config.estimators.end(), [](EstimatorKind k) {
        return k == EstimatorKind::chipperfield || k == EstimatorKind::optimal;
      });
  if (needs_table) {
    try {
      table = config.table_mode == TableMode::oracle ? oracle_table(scenario)
                                                     : estimate_match_prob(seen, config.fallback);
      rep.fallback_cells =
          table->count(Provenance::pooled_over_y) + table->count(Provenance::global);
    } catch (const Error& e) {
      table_failure = e.what();
    }
  }

  for (const auto kind : config.estimators) {
    try {
      switch (kind) {
        case EstimatorKind::oracle:
          rep.estimates.push_back(from_fit(fit_oracle(full, opts)));
          break;
        case EstimatorKind::naive:
          rep.estimates.push_back(from_fit(fit_naive(seen, opts)));
          break;
        case EstimatorKind::chipperfield:
          if (!table) throw EstimationError(*table_failure);
          rep.estimates.push_back(from_fit(fit_chipperfield(seen, *table, opts)));
          break;
        case EstimatorKind::optimal: {
          if (!table) throw EstimationError(*table_failure);
          TwoStepOptions two_step;
          two_step.review_probability = scenario.review_probability;
          two_step.extra_iterations = config.extra_iterations;
          two_step.fallback = config.fallback;
          rep.estimates.push_back(from_fit(fit_optimal_two_step(seen, two_step, opts, table).fit));
          break;
        }
      }
    } catch (const Error& e) {
      rep.estimates.push_back(failed(e));
    }
  }
  return rep;
}

namespace {

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Trace of the sample covariance (divisor m - 1) of the rows picked by idx.
double trace_of_covariance(const std::vector<Eigen::VectorXd>& betas,
                           const std::vector<std::size_t>& idx) {
  const auto p = betas.front().size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
  for (const auto i : idx) mean += betas[i];
  mean /= static_cast<double>(idx.size());
  double ss = 0.0;
  for (const auto i : idx) ss += (betas[i] - mean).squaredNorm();
  return ss / static_cast<double>(idx.size() - 1);
}

TraceComparison compare(const MCConfig& config, const std::vector<ReplicationOutcome>& reps,
                        std::size_t a, std::size_t b) {
  TraceComparison cmp;
  cmp.first = config.estimators[a];
  cmp.second = config.estimators[b];
  std::vector<Eigen::VectorXd> fa, fb;
  for (const auto& r : reps) {
    if (r.estimates[a].converged && r.estimates[b].converged) {
      fa.push_back(*r.estimates[a].beta);
      fb.push_back(*r.estimates[b].beta);
    }
  }
  cmp.common_replications = fa.size();
  if (fa.size() < 2) {
    return cmp;
  }
  std::vector<std::size_t> all(fa.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  cmp.first_trace = trace_of_covariance(fa, all);
  cmp.second_trace = trace_of_covariance(fb, all);
  cmp.difference = cmp.first_trace - cmp.second_trace;

  // Resampling stream depends only on the base seed and the pair.
  SplitMix64 rng = stream_for(mix64(config.base_seed ^ 0x626f6f7473747261ULL), a * 64 + b);
  std::vector<double> diffs(config.bootstrap_resamples);
  std::vector<std::size_t> idx(fa.size());
  for (auto& d : diffs) {
    for (auto& i : idx) i = static_cast<std::size_t>(rng.below(fa.size()));
    d = trace_of_covariance(fa, idx) - trace_of_covariance(fb, idx);
  }
  cmp.ci_lower = quantile(diffs, 0.025);
  cmp.ci_upper = quantile(diffs, 0.975);
  if (cmp.ci_upper < 0.0) {
    cmp.outcome = TraceOutcome::first_smaller;
  } else if (cmp.ci_lower > 0.0) {
    cmp.outcome = TraceOutcome::second_smaller;
  } else if (cmp.ci_upper - cmp.ci_lower < config.equivalence_fraction * cmp.second_trace) {
    cmp.outcome = TraceOutcome::equivalent_within_tolerance;
  }
  return cmp;
}

}  // namespace

MCReport summarize(const MCConfig& config, std::vector<ReplicationOutcome> outcomes) {
  MCReport report;
  report.config = config;
  const auto p = static_cast<Eigen::Index>(config.scenario.dim());
  const Eigen::VectorXd& truth = config.scenario.beta_true.values();

  for (const auto& r : outcomes) report.seeds.push_back(r.seed);

  for (std::size_t e = 0; e < config.estimators.size(); ++e) {
    EstimatorSummary s;
    s.kind = config.estimators[e];
    s.mean_beta = Eigen::VectorXd::Zero(p);
    s.mean_sandwich_covariance = Eigen::MatrixXd::Zero(p, p);
    s.empirical_covariance = Eigen::MatrixXd::Zero(p, p);
    for (const auto& r : outcomes) {
      const auto& o = r.estimates[e];
      if (!o.converged) {
        ++s.failures;
        continue;
      }
      ++s.converged;
      s.mean_beta += *o.beta;
      s.mean_sandwich_covariance += *o.covariance;
    }
    if (s.converged > 0) {
      const double m = static_cast<double>(s.converged);
      s.mean_beta /= m;
      s.mean_sandwich_covariance /= m;
      for (const auto& r : outcomes) {
        const auto& o = r.estimates[e];
        if (o.converged) {
          const Eigen::VectorXd dev = *o.beta - s.mean_beta;
          s.empirical_covariance += dev * dev.transpose();
        }
      }
      if (s.converged > 1) {
        s.empirical_covariance /= m - 1.0;
      }
      s.bias_standard_error = (s.empirical_covariance.diagonal() / m).cwiseSqrt();
    } else {
      s.mean_beta.setConstant(std::numeric_limits<double>::quiet_NaN());
      s.bias_standard_error = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::quiet_NaN());
    }
    s.bias = s.mean_beta - truth;
    s.trace = s.empirical_covariance.trace();
    s.mean_sandwich_trace = s.mean_sandwich_covariance.trace();
    report.low_precision = report.low_precision || s.converged < 30;
    report.estimators.push_back(std::move(s));
  }

  for (std::size_t a = 0; a < config.estimators.size(); ++a) {
    for (std::size_t b = a + 1; b < config.estimators.size(); ++b) {
      report.comparisons.push_back(compare(config, outcomes, b, a));
    }
  }

  report.identity_gap =
      enumerate_score_moments(config.scenario, config.scenario.beta_true).gap();
  report.identity_gap = 0.5 * (report.identity_gap + report.identity_gap.transpose()).eval();
  report.identity_gap_min_eigenvalue = check_positive_definite(report.identity_gap).min_eigenvalue;
  report.replications = std::move(outcomes);
  return report;
}

MCReport run_mc(const MCConfig& config, Execution exec) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  std::vector<ReplicationOutcome> outcomes(config.replications);
  const auto n = static_cast<std::ptrdiff_t>(config.replications);
  const bool par = exec == Execution::parallel;
#pragma omp parallel for schedule(dynamic) if (par)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    outcomes[static_cast<std::size_t>(k)] = run_replication(config, static_cast<std::size_t>(k));
  }
  MCReport report = summarize(config, std::move(outcomes));
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.threads = par ? omp_get_max_threads() : 1;
  return report;
}

void write_replication_csv(std::ostream& os, const MCReport& report) {
  const auto p = report.config.scenario.dim();
  os << "replication,seed,estimator,converged";
  for (std::size_t k = 0; k < p; ++k) os << ",beta_" << (k + 1);
  os << '\n';
  for (const auto& r : report.replications) {
    for (std::size_t e = 0; e < r.estimates.size(); ++e) {
      const auto& o = r.estimates[e];
      os << r.index << ',' << r.seed << ',' << to_string(report.config.estimators[e]) << ','
         << (o.converged ? 1 : 0);
      for (std::size_t k = 0; k < p; ++k) {
        os << ',';
        if (o.beta) os << format_double((*o.beta)[static_cast<Eigen::Index>(k)]);
      }
      os << '\n';
    }
  }
}

}  // namespace linkreg
