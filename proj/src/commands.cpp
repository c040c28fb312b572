#include "linkreg/commands.hpp"

#include "linkreg/errors.hpp"
#include "linkreg/scenario_io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace linkreg {

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const IoError*>(&e)) return exit_io;
  if (dynamic_cast<const NumericalError*>(&e)) return exit_numerical;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DataIntegrityError*>(&e) ||
      dynamic_cast<const DimensionError*>(&e)) {
    return exit_config;
  }
  if (dynamic_cast<const Json::exception*>(&e)) return exit_config;
  return exit_numerical;
}

void write_json(const Json& doc, const std::optional<std::filesystem::path>& path,
                std::ostream& fallback) {
  const std::string text = doc.dump(2) + "\n";
  if (!path || path->string() == "-") {
    fallback << text;
    return;
  }
  std::ofstream out(*path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open " + path->string() + " for writing");
  }
  out << text;
  if (!out) {
    throw IoError("failed writing " + path->string());
  }
}

LinkedDataset cmd_simulate(const SimulateRequest& req) {
  ScenarioConfig config = load_scenario(req.config);
  if (req.seed) {
    config.seed = *req.seed;
  }
  LinkedDataset ds = generate(config);
  save_dataset_csv(req.out, ds);
  return ds;
}

FitOutcome cmd_fit(const FitRequest& req) {
  req.solver.validate();
  const LinkedDataset ds = load_dataset_csv(req.data);
  std::optional<ScenarioConfig> config;
  if (req.config) {
    config = load_scenario(*req.config);
    if (static_cast<Eigen::Index>(config->dim()) != ds.dim()) {
      throw ConfigError("scenario dimension " + std::to_string(config->dim()) +
                        " does not match dataset dimension " + std::to_string(ds.dim()));
    }
  }
  const bool uses_table =
      req.estimator == EstimatorKind::chipperfield || req.estimator == EstimatorKind::optimal;
  if (req.estimator == EstimatorKind::oracle) {
    for (const auto y : ds.y_latent_column()) {
      if (y < 0) {
        throw ConfigError("the oracle estimator needs the y_latent column on every row");
      }
    }
  }
  if (uses_table && req.table == TableMode::oracle && !config) {
    throw ConfigError("--table oracle needs the generating scenario (--config)");
  }

  const LinkedDataset seen = analysis_view(ds);
  const FitOptions opts{req.solver, Execution::parallel};
  Json report{{"estimator", to_string(req.estimator)},
              {"table_mode", uses_table ? Json(to_string(req.table)) : Json(nullptr)},
              {"n", ds.size()},
              {"reviewed", ds.reviewed_count()}};

  std::optional<MatchProbTable> table;
  if (uses_table) {
    table = req.table == TableMode::oracle ? oracle_table(*config)
                                           : estimate_match_prob(seen, req.fallback);
  }

  FitResult fit;
  std::optional<SandwichEstimate> sw;
  switch (req.estimator) {
    case EstimatorKind::oracle: {
      const auto eq = oracle_equation(ds, opts.exec);
      fit = fit_oracle(ds, opts);
      if (fit.converged) sw = sandwich(eq, fit);
      break;
    }
    case EstimatorKind::naive: {
      const auto eq = naive_equation(seen, opts.exec);
      fit = fit_naive(seen, opts);
      if (fit.converged) sw = sandwich(eq, fit);
      break;
    }
    case EstimatorKind::chipperfield: {
      const auto eq = chipperfield_equation(seen, *table, opts.exec);
      fit = fit_chipperfield(seen, *table, opts);
      if (fit.converged) sw = sandwich(eq, fit);
      break;
    }
    case EstimatorKind::optimal: {
      TwoStepOptions two_step;
      two_step.extra_iterations = req.extra_iterations;
      two_step.fallback = req.fallback;
      two_step.review_probability =
          config ? config->review_probability
                 : static_cast<double>(ds.reviewed_count()) / static_cast<double>(ds.size());
      const TwoStepResult res = fit_optimal_two_step(seen, two_step, opts, table);
      fit = res.fit;
      report["review_probability"] = two_step.review_probability;
      report["first_step"] = to_json(res.first_step);
      if (fit.converged) {
        const auto eq = optimal_equation(seen, res.table, res.moments,
                                         marginal_match_prob(seen, res.table),
                                         two_step.review_probability, res.frozen, opts.exec);
        sw = sandwich(eq, fit);
      }
      break;
    }
  }
  report["fit"] = to_json(fit);
  report["sandwich"] = sw ? to_json(*sw) : Json(nullptr);
  report["table"] = table ? to_json(*table) : Json(nullptr);
  return FitOutcome{std::move(fit), std::move(report)};
}

MCReport cmd_mc(const MCRequest& req) {
  MCConfig config = load_mc_config(req.config);
  if (req.seed) config.base_seed = *req.seed;
  if (req.replications) config.replications = *req.replications;
  if (req.estimator) config.estimators = {*req.estimator};
  if (req.table) config.table_mode = *req.table;
  config.validate();
  MCReport report = run_mc(config, req.exec);
  if (req.plot_data) {
    std::ofstream out(*req.plot_data, std::ios::binary);
    if (!out) {
      throw IoError("cannot open " + req.plot_data->string() + " for writing");
    }
    write_replication_csv(out, report);
  }
  return report;
}

GapReport cmd_score_audit(const ScoreAuditRequest& req) {
  ScenarioConfig config = load_scenario(req.config);
  if (req.seed) config.seed = *req.seed;
  Coefficients beta = config.beta_true;
  if (req.beta) {
    if (req.beta->size() != config.dim()) {
      throw ConfigError("--beta needs " + std::to_string(config.dim()) + " values");
    }
    beta = Coefficients(Eigen::Map<const Eigen::VectorXd>(
        req.beta->data(), static_cast<Eigen::Index>(req.beta->size())));
  }
  if (req.n_mc == 0) {
    throw ConfigError("--n-mc must be positive");
  }
  return score_identity_audit(config, beta, req.n_mc,
                              AuditOptions{req.require_closed_form, Execution::parallel});
}

namespace {

const std::map<std::string, EstimatorKind> kEstimatorNames{
    {"oracle", EstimatorKind::oracle},
    {"naive", EstimatorKind::naive},
    {"chipperfield", EstimatorKind::chipperfield},
    {"optimal", EstimatorKind::optimal}};

const std::map<std::string, TableMode> kTableNames{{"oracle", TableMode::oracle},
                                                    {"estimated", TableMode::estimated}};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Logistic regression on probabilistically linked data"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("--quiet", quiet, "Suppress progress messages");

  SimulateRequest sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a linked dataset CSV from a scenario");
  simulate->add_option("--config", sim.config, "Scenario config file")->required();
  simulate->add_option("--out", sim.out, "Dataset CSV to write")->required();
  simulate->add_option("--seed", sim.seed, "Override the scenario seed");
  simulate->add_flag("--quiet", quiet);

  FitRequest fit;
  std::string fit_out;
  auto* fitcmd = app.add_subcommand("fit", "Fit one estimator to a dataset CSV");
  fitcmd->add_option("--data", fit.data, "Dataset CSV")->required();
  std::string fit_estimator = "chipperfield";
  std::string fit_table = "estimated";
  fitcmd->add_option("--estimator", fit_estimator, "oracle|naive|chipperfield|optimal")
      ->check(CLI::IsMember(kEstimatorNames));
  fitcmd->add_option("--table", fit_table, "oracle|estimated")->check(CLI::IsMember(kTableNames));
  fitcmd->add_option("--config", fit.config, "Generating scenario (oracle table, review rate)");
  fitcmd->add_option("--out", fit_out, "FitResult JSON (stdout when omitted)");
  fitcmd->add_option("--extra-iterations", fit.extra_iterations,
                     "Re-freeze the optimal weights this many extra times")
      ->check(CLI::NonNegativeNumber);
  fitcmd->add_flag("--quiet", quiet);

  MCRequest mc;
  std::string mc_out;
  bool plot = false;
  auto* mccmd = app.add_subcommand("mc", "Monte Carlo comparison of estimators");
  mccmd->add_option("--config", mc.config, "Monte Carlo config file")->required();
  mccmd->add_option("--out", mc_out, "MCReport JSON (stdout when omitted)");
  mccmd->add_option("--seed", mc.seed, "Override base_seed");
  mccmd->add_option("--reps", mc.replications, "Override the replication count");
  std::string mc_estimator;
  std::string mc_table;
  mccmd->add_option("--estimator", mc_estimator, "Run a single estimator")
      ->check(CLI::IsMember(kEstimatorNames));
  mccmd->add_option("--table", mc_table, "oracle|estimated")->check(CLI::IsMember(kTableNames));
  mccmd->add_flag("--emit-plot-data", plot,
                  "Also write per-replication estimates to <out>.replications.csv");
  mccmd->add_flag("--quiet", quiet);

  ScoreAuditRequest audit;
  std::string audit_out;
  std::string beta_text;
  auto* auditcmd = app.add_subcommand("score-audit", "Check the score identity by simulation");
  auditcmd->add_option("--config", audit.config, "Scenario config file")->required();
  auditcmd->add_option("--out", audit_out, "GapReport JSON (stdout when omitted)");
  auditcmd->add_option("--beta", beta_text, "Comma-separated coefficients (default beta_true)");
  auditcmd->add_option("--n-mc", audit.n_mc, "Simulated records");
  auditcmd->add_option("--seed", audit.seed, "Override the scenario seed");
  auditcmd->add_flag("--require-closed-form", audit.require_closed_form,
                     "Fail unless the closed-form gap applies");
  auditcmd->add_flag("--quiet", quiet);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_config;
  }

  auto optional_path = [](const std::string& s) -> std::optional<std::filesystem::path> {
    if (s.empty()) return std::nullopt;
    return std::filesystem::path(s);
  };

  try {
    if (simulate->parsed()) {
      const auto ds = cmd_simulate(sim);
      if (!quiet) {
        const auto seed = sim.seed ? *sim.seed : ds.config_echo()->seed;
        err << "wrote " << ds.size() << " records to " << sim.out.string() << " (seed " << seed
            << ")\n";
      }
      return exit_ok;
    }
    if (fitcmd->parsed()) {
      fit.out = optional_path(fit_out);
      fit.estimator = kEstimatorNames.at(fit_estimator);
      fit.table = kTableNames.at(fit_table);
      const auto res = cmd_fit(fit);
      write_json(res.report, fit.out, out);
      if (!res.fit.converged) {
        err << "fit did not converge after " << res.fit.iterations << " updates\n";
        return exit_numerical;
      }
      return exit_ok;
    }
    if (mccmd->parsed()) {
      mc.out = optional_path(mc_out);
      if (!mc_estimator.empty()) mc.estimator = kEstimatorNames.at(mc_estimator);
      if (!mc_table.empty()) mc.table = kTableNames.at(mc_table);
      if (plot) {
        mc.plot_data = mc.out ? std::filesystem::path(mc.out->string() + ".replications.csv")
                              : std::filesystem::path("replications.csv");
      }
      const auto report = cmd_mc(mc);
      write_json(to_json(report), mc.out, out);
      if (!quiet) {
        err << "ran " << report.config.replications << " replications in "
            << report.wall_clock_seconds << " s";
        if (report.low_precision) err << " (low precision: fewer than 30 converged)";
        err << "\n";
      }
      return exit_ok;
    }
    if (auditcmd->parsed()) {
      audit.out = optional_path(audit_out);
      if (!beta_text.empty()) audit.beta = parse_double_list(beta_text);
      const auto report = cmd_score_audit(audit);
      write_json(to_json(report), audit.out, out);
      if (!quiet) {
        err << "gap min eigenvalue " << report.min_eigenvalue
            << (report.positive_definite ? " (positive definite)\n" : "\n");
      }
      return exit_ok;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return exit_config;
}

}  // namespace linkreg
