#pragma once

// Monte Carlo comparison of estimators over independent simulated replications.
// Replication k uses seed base_seed + k; replications run concurrently and are
// aggregated in replication order, so the report does not depend on threads.

#include "linkreg/estimators.hpp"
#include "linkreg/linkage_sim.hpp"
#include "linkreg/match_prob.hpp"
#include "linkreg/model.hpp"
#include "linkreg/scenario_io.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace linkreg {

enum class TableMode { oracle, estimated };

std::string_view to_string(TableMode mode) noexcept;
TableMode parse_table_mode(std::string_view name);

struct MCConfig {
  ScenarioConfig scenario;
  std::size_t replications = 0;
  std::vector<EstimatorKind> estimators;
  std::uint64_t base_seed = 0;
  TableMode table_mode = TableMode::estimated;
  SolverOptions solver;
  int extra_iterations = 0;
  FallbackPolicy fallback = FallbackPolicy::hierarchical;
  std::size_t bootstrap_resamples = 2000;
  // Trace-difference intervals narrower than this fraction of the second
  // estimator's trace count as equivalence when they contain zero.
  double equivalence_fraction = 0.05;

  /// Throws ConfigError: replications >= 2, nonempty estimator set without repeats.
  void validate() const;
};

const std::set<std::string, std::less<>>& mc_keys();
MCConfig parse_mc_config(const KeyValueDocument& doc);
MCConfig load_mc_config(const std::filesystem::path& path);

struct EstimateOutcome {
  bool converged = false;
  int iterations = 0;
  std::optional<Eigen::VectorXd> beta;        // set when converged
  std::optional<Eigen::MatrixXd> covariance;  // sandwich, set when converged
  std::optional<std::string> failure;         // reason when not converged
};

struct ReplicationOutcome {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::vector<EstimateOutcome> estimates;  // aligned with MCConfig::estimators
  // Table cells filled by fallback (estimated mode only).
  std::size_t fallback_cells = 0;
};

struct EstimatorSummary {
  EstimatorKind kind = EstimatorKind::oracle;
  std::size_t converged = 0;
  std::size_t failures = 0;
  Eigen::VectorXd mean_beta;
  Eigen::VectorXd bias;
  Eigen::VectorXd bias_standard_error;  // sqrt(diag(empirical_cov) / converged)
  Eigen::MatrixXd empirical_covariance; // divisor converged - 1
  Eigen::MatrixXd mean_sandwich_covariance;
  double trace = 0.0;                   // of empirical_covariance
  double mean_sandwich_trace = 0.0;
};

enum class TraceOutcome { first_smaller, second_smaller, equivalent_within_tolerance, inconclusive };
std::string_view to_string(TraceOutcome o) noexcept;

/// trace(cov first) - trace(cov second) over replications where both converged,
/// with a percentile bootstrap interval that resamples replications.
struct TraceComparison {
  EstimatorKind first = EstimatorKind::oracle;
  EstimatorKind second = EstimatorKind::oracle;
  std::size_t common_replications = 0;
  double first_trace = 0.0;
  double second_trace = 0.0;
  double difference = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  TraceOutcome outcome = TraceOutcome::inconclusive;
};

struct MCReport {
  MCConfig config;
  std::vector<std::uint64_t> seeds;
  std::vector<EstimatorSummary> estimators;
  std::vector<TraceComparison> comparisons;
  std::vector<ReplicationOutcome> replications;
  // Exact moments of the known-probability score at beta_true.
  Eigen::MatrixXd identity_gap;
  double identity_gap_min_eigenvalue = 0.0;
  // Fewer than 30 converged replications for some estimator.
  bool low_precision = false;
  double wall_clock_seconds = 0.0;
  int threads = 1;
};

/// Fits one replication's data with every configured estimator.
ReplicationOutcome run_replication(const MCConfig& config, std::size_t index);

MCReport summarize(const MCConfig& config, std::vector<ReplicationOutcome> outcomes);

/// Runs every replication (concurrently for Execution::parallel) and summarizes.
MCReport run_mc(const MCConfig& config, Execution exec = Execution::parallel);

/// One row per replication and estimator: replication, seed, estimator,
/// converged, beta_1..beta_p.
void write_replication_csv(std::ostream& os, const MCReport& report);

}  // namespace linkreg
