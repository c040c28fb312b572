#pragma once

// Clerical-sample plug-ins for the two-step estimator: the cell ratio estimate
// of P(D = 1 | X, Y*) and the per-level moment E[P(D = 1 | X, Y*)^2 (Y* - mu)^2 | X].

#include "linkreg/levels.hpp"
#include "linkreg/linkage_sim.hpp"
#include "linkreg/model.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

namespace linkreg {

enum class Provenance { cell, pooled_over_y, global, oracle };

std::string_view to_string(Provenance p) noexcept;

struct MatchProbCell {
  double p_hat = 0.0;
  std::size_t n_matched = 0;
  std::size_t n_unmatched = 0;
  Provenance provenance = Provenance::cell;
};

/// Empty clerical cells: fall back cell -> pooled over y* within x -> global,
/// or throw (strict).
enum class FallbackPolicy { hierarchical, strict };

class MatchProbTable {
 public:
  MatchProbTable(CovariateLevels levels, std::vector<std::array<std::optional<MatchProbCell>, 2>> cells,
                 std::vector<std::optional<double>> level_match_prob = {});

  const CovariateLevels& levels() const noexcept { return levels_; }
  const std::optional<MatchProbCell>& cell(std::size_t level, int y_star) const;
  /// p_hat of a cell; throws DataIntegrityError when the cell is absent.
  double p_hat(std::size_t level, int y_star) const;

  /// Analytic P(D = 1 | X) per level when known (oracle tables), else nullopt.
  std::optional<double> level_match_prob(std::size_t level) const;

  std::size_t count(Provenance p) const noexcept;

  /// CSV columns: x1..xp, y_star, p_hat, n_matched, n_unmatched, provenance.
  void write_csv(std::ostream& os) const;

 private:
  CovariateLevels levels_;
  std::vector<std::array<std::optional<MatchProbCell>, 2>> cells_;
  std::vector<std::optional<double>> level_match_prob_;
};

/// Per-level estimate of E[P(D = 1 | X, Y*)^2 (Y* - mu)^2 | X = x].
class ResidualMomentTable {
 public:
  struct Entry {
    double m_hat = 0.0;
    std::size_t rows = 0;
  };

  ResidualMomentTable(CovariateLevels levels, std::vector<Entry> entries);

  const CovariateLevels& levels() const noexcept { return levels_; }
  const Entry& entry(std::size_t level) const { return entries_.at(level); }
  double m_hat(const Eigen::VectorXd& x) const;

 private:
  CovariateLevels levels_;
  std::vector<Entry> entries_;
};

/// Ratio estimate per (x, y*) cell over reviewed records:
/// #{reviewed, d = 1} / #{reviewed}. Every y* value observed at a level (in any
/// record) gets an entry. Throws EstimationError when nothing was reviewed.
MatchProbTable estimate_match_prob(const LinkedDataset& ds,
                                   FallbackPolicy policy = FallbackPolicy::hierarchical);

/// m_hat(x) = mean over ALL records at level x of p_hat(x_j, y*_j)^2 (y*_j - mu(beta, x_j))^2.
ResidualMomentTable estimate_residual_moment(const LinkedDataset& ds, const MatchProbTable& table,
                                             const Coefficients& beta);

/// Table filled from the generative model (provenance oracle), with the
/// analytic P(D = 1 | X) = lambda(x) attached. Cells of zero probability are absent.
MatchProbTable oracle_table(const ScenarioConfig& config);

/// Weight inside H_i for every record: r d + (1 - r) p_hat(x, y*). Reviewed records
/// use their clerical d and never touch the table.
std::vector<double> record_weights(const LinkedDataset& ds, const MatchProbTable& table);

}  // namespace linkreg
