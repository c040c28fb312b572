#pragma once

// Subcommands of the `linkreg` tool. Each is callable in-process; run_cli adds
// argument parsing and maps errors to exit codes:
//   0 success, 2 configuration / input error, 3 numerical failure, 4 I/O error.

#include "linkreg/estimators.hpp"
#include "linkreg/inference.hpp"
#include "linkreg/monte_carlo.hpp"
#include "linkreg/report_json.hpp"

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

namespace linkreg {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_numerical = 3, exit_io = 4 };

int exit_code_for(const std::exception& e) noexcept;

struct SimulateRequest {
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
};
/// Writes the dataset CSV and returns the generated data.
LinkedDataset cmd_simulate(const SimulateRequest& req);

struct FitRequest {
  std::filesystem::path data;
  EstimatorKind estimator = EstimatorKind::chipperfield;
  TableMode table = TableMode::estimated;
  // Scenario config: required for the oracle table; supplies the review
  // probability of the optimal estimator (else the reviewed fraction is used).
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> out;
  int extra_iterations = 0;
  FallbackPolicy fallback = FallbackPolicy::hierarchical;
  SolverOptions solver;
};
struct FitOutcome {
  FitResult fit;
  Json report;
};
FitOutcome cmd_fit(const FitRequest& req);

struct MCRequest {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replications;
  std::optional<EstimatorKind> estimator;
  std::optional<TableMode> table;
  std::optional<std::filesystem::path> plot_data;
  Execution exec = Execution::parallel;
};
MCReport cmd_mc(const MCRequest& req);

struct ScoreAuditRequest {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::optional<std::vector<double>> beta;  // defaults to beta_true
  std::size_t n_mc = 1'000'000;
  std::optional<std::uint64_t> seed;
  bool require_closed_form = false;
};
GapReport cmd_score_audit(const ScoreAuditRequest& req);

/// Writes `doc` (2-space indent, trailing newline) to path, or to `fallback`
/// when path is absent or "-".
void write_json(const Json& doc, const std::optional<std::filesystem::path>& path,
                std::ostream& fallback);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace linkreg
