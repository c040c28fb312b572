#include "linkreg/report_json.hpp"

#include "linkreg/errors.hpp"
#include "linkreg/levels.hpp"

namespace linkreg {

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      data.push_back(m(i, k));
    }
  }
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw DimensionError("matrix JSON: data length does not match rows * cols");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) {
      const auto& v = data[static_cast<std::size_t>(i * cols + k)];
      m(i, k) = v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
    }
  }
  return m;
}

Json vector_to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    out.push_back(v[k]);
  }
  return out;
}

Json to_json(const FitResult& fit) {
  Json j{{"beta", vector_to_json(fit.beta.values())},
         {"converged", fit.converged},
         {"iterations", fit.iterations},
         {"final_score_norm", fit.final_score_norm}};
  if (fit.covariance) {
    j["covariance"] = matrix_to_json(*fit.covariance);
    j["standard_errors"] = vector_to_json(fit.covariance->diagonal().cwiseSqrt());
  } else {
    j["covariance"] = nullptr;
    j["standard_errors"] = nullptr;
  }
  return j;
}

Json to_json(const SandwichEstimate& s) {
  return Json{{"bread", matrix_to_json(s.bread)},
              {"meat", matrix_to_json(s.meat)},
              {"covariance", matrix_to_json(s.covariance)}};
}

Json to_json(const GapReport& r) {
  Json j{{"n_mc", r.n_mc},
         {"empirical_lhs", matrix_to_json(r.empirical_lhs)},
         {"empirical_rhs", matrix_to_json(r.empirical_rhs)},
         {"gap", matrix_to_json(r.gap)},
         {"gap_standard_error", matrix_to_json(r.gap_standard_error)},
         {"enumerated_gap", matrix_to_json(r.enumerated_gap)},
         {"closed_form_gap", nullptr},
         {"closed_form_unavailable", nullptr},
         {"min_eigenvalue", r.min_eigenvalue},
         {"positive_definite", r.positive_definite}};
  if (r.closed_form_gap) {
    j["closed_form_gap"] = matrix_to_json(*r.closed_form_gap);
  }
  if (r.closed_form_unavailable) {
    j["closed_form_unavailable"] = *r.closed_form_unavailable;
  }
  return j;
}

Json to_json(const ScenarioConfig& c) {
  Json levels = Json::array();
  for (const auto& l : c.covariate_levels) {
    levels.push_back(Json{{"x", vector_to_json(l.x.values())}, {"weight", l.weight}});
  }
  Json j{{"n", c.n},
         {"seed", c.seed},
         {"beta_true", vector_to_json(c.beta_true.values())},
         {"covariate_levels", std::move(levels)}};
  if (const auto* m = std::get_if<ConstantMatch>(&c.match_model)) {
    j["match_model"] = Json{{"kind", "constant"}, {"lambda", m->lambda}};
  } else {
    j["match_model"] =
        Json{{"kind", "cell"}, {"lambda", std::get<CellMatch>(c.match_model).lambda}};
  }
  if (const auto* q = std::get_if<PerLevelRate>(&c.mismatch_model)) {
    j["mismatch_response"] = Json{{"kind", "per-level"}, {"q", q->q}};
  } else {
    j["mismatch_response"] = Json{{"kind", "population-marginal"}};
  }
  j["review_probability"] = c.review_probability;
  return j;
}

Json to_json(const MatchProbTable& t) {
  Json counts = Json::object();
  for (const auto p : {Provenance::cell, Provenance::pooled_over_y, Provenance::global,
                       Provenance::oracle}) {
    counts[std::string(to_string(p))] = t.count(p);
  }
  Json cells = Json::array();
  for (std::size_t l = 0; l < t.levels().size(); ++l) {
    for (int y = 0; y <= 1; ++y) {
      if (const auto& c = t.cell(l, y)) {
        cells.push_back(Json{{"x", vector_to_json(t.levels().level(l))},
                             {"y_star", y},
                             {"p_hat", c->p_hat},
                             {"n_matched", c->n_matched},
                             {"n_unmatched", c->n_unmatched},
                             {"provenance", to_string(c->provenance)}});
      }
    }
  }
  return Json{{"provenance_counts", std::move(counts)}, {"cells", std::move(cells)}};
}

Json to_json(const MCReport& r) {
  const auto& c = r.config;
  Json estimators = Json::array();
  for (const auto k : c.estimators) estimators.push_back(to_string(k));

  Json config{{"scenario", to_json(c.scenario)},
              {"replications", c.replications},
              {"estimators", std::move(estimators)},
              {"base_seed", c.base_seed},
              {"table_mode", to_string(c.table_mode)},
              {"extra_iterations", c.extra_iterations},
              {"fallback", c.fallback == FallbackPolicy::strict ? "strict" : "hierarchical"},
              {"bootstrap_resamples", c.bootstrap_resamples},
              {"equivalence_fraction", c.equivalence_fraction},
              {"solver",
               {{"max_iterations", c.solver.max_iterations},
                {"step_tolerance", c.solver.step_tolerance},
                {"max_step_halvings", c.solver.max_step_halvings}}}};

  Json summaries = Json::array();
  for (const auto& s : r.estimators) {
    summaries.push_back(Json{{"estimator", to_string(s.kind)},
                             {"converged", s.converged},
                             {"failures", s.failures},
                             {"mean_beta", vector_to_json(s.mean_beta)},
                             {"bias", vector_to_json(s.bias)},
                             {"bias_standard_error", vector_to_json(s.bias_standard_error)},
                             {"empirical_covariance", matrix_to_json(s.empirical_covariance)},
                             {"mean_sandwich_covariance", matrix_to_json(s.mean_sandwich_covariance)},
                             {"trace", s.trace},
                             {"mean_sandwich_trace", s.mean_sandwich_trace}});
  }

  Json comparisons = Json::array();
  for (const auto& t : r.comparisons) {
    comparisons.push_back(Json{{"first", to_string(t.first)},
                               {"second", to_string(t.second)},
                               {"common_replications", t.common_replications},
                               {"first_trace", t.first_trace},
                               {"second_trace", t.second_trace},
                               {"difference", t.difference},
                               {"ci95", {t.ci_lower, t.ci_upper}},
                               {"outcome", to_string(t.outcome)}});
  }

  Json failures = Json::array();
  for (const auto& rep : r.replications) {
    for (std::size_t e = 0; e < rep.estimates.size(); ++e) {
      if (rep.estimates[e].failure) {
        failures.push_back(Json{{"replication", rep.index},
                                {"seed", rep.seed},
                                {"estimator", to_string(c.estimators[e])},
                                {"reason", *rep.estimates[e].failure}});
      }
    }
  }
  std::size_t fallback_cells = 0;
  for (const auto& rep : r.replications) fallback_cells += rep.fallback_cells;

  return Json{{"config", std::move(config)},
              {"seeds", r.seeds},
              {"low_precision", r.low_precision},
              {"estimators", std::move(summaries)},
              {"trace_comparisons", std::move(comparisons)},
              {"identity_gap", matrix_to_json(r.identity_gap)},
              {"identity_gap_min_eigenvalue", r.identity_gap_min_eigenvalue},
              {"fallback_cells", fallback_cells},
              {"failures", std::move(failures)},
              {"metadata", {{"wall_clock_seconds", r.wall_clock_seconds}, {"threads", r.threads}}}};
}

}  // namespace linkreg
