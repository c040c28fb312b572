#include "linkreg/match_prob.hpp"

#include "linkreg/errors.hpp"
#include "linkreg/scenario_io.hpp"

#include <ostream>
#include <string>

namespace linkreg {

std::string_view to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::cell:
      return "cell";
    case Provenance::pooled_over_y:
      return "pooled-over-y";
    case Provenance::global:
      return "global";
    case Provenance::oracle:
      return "oracle";
  }
  return "unknown";
}

MatchProbTable::MatchProbTable(CovariateLevels levels,
                               std::vector<std::array<std::optional<MatchProbCell>, 2>> cells,
                               std::vector<std::optional<double>> level_match_prob)
    : levels_(std::move(levels)),
      cells_(std::move(cells)),
      level_match_prob_(std::move(level_match_prob)) {
  if (cells_.size() != levels_.size()) {
    throw DimensionError("match probability table: one cell pair per level required");
  }
  if (level_match_prob_.empty()) {
    level_match_prob_.resize(levels_.size());
  }
  if (level_match_prob_.size() != levels_.size()) {
    throw DimensionError("match probability table: level probabilities misaligned");
  }
}

const std::optional<MatchProbCell>& MatchProbTable::cell(std::size_t level, int y_star) const {
  if (y_star != 0 && y_star != 1) {
    throw DataIntegrityError("y_star must be 0 or 1");
  }
  return cells_.at(level)[static_cast<std::size_t>(y_star)];
}

double MatchProbTable::p_hat(std::size_t level, int y_star) const {
  const auto& c = cell(level, y_star);
  if (!c) {
    throw DataIntegrityError("match probability table has no cell for covariates " +
                             describe_level(levels_.level(level)) +
                             ", y_star = " + std::to_string(y_star));
  }
  return c->p_hat;
}

std::optional<double> MatchProbTable::level_match_prob(std::size_t level) const {
  return level_match_prob_.at(level);
}

std::size_t MatchProbTable::count(Provenance p) const noexcept {
  std::size_t n = 0;
  for (const auto& pair : cells_) {
    for (const auto& c : pair) {
      n += (c && c->provenance == p) ? 1 : 0;
    }
  }
  return n;
}

void MatchProbTable::write_csv(std::ostream& os) const {
  const auto p = levels_.size() ? levels_.level(0).size() : 0;
  for (Eigen::Index k = 0; k < p; ++k) {
    os << 'x' << (k + 1) << ',';
  }
  os << "y_star,p_hat,n_matched,n_unmatched,provenance\n";
  for (std::size_t l = 0; l < levels_.size(); ++l) {
    for (int y = 0; y <= 1; ++y) {
      const auto& c = cells_[l][static_cast<std::size_t>(y)];
      if (!c) {
        continue;
      }
      for (Eigen::Index k = 0; k < p; ++k) {
        os << format_double(levels_.level(l)[k]) << ',';
      }
      os << y << ',' << format_double(c->p_hat) << ',' << c->n_matched << ',' << c->n_unmatched << ','
         << to_string(c->provenance) << '\n';
    }
  }
}

ResidualMomentTable::ResidualMomentTable(CovariateLevels levels, std::vector<Entry> entries)
    : levels_(std::move(levels)), entries_(std::move(entries)) {
  if (entries_.size() != levels_.size()) {
    throw DimensionError("residual moment table: one entry per level required");
  }
}

double ResidualMomentTable::m_hat(const Eigen::VectorXd& x) const {
  const auto k = levels_.find(x);
  if (!k) {
    throw DataIntegrityError("residual moment table has no level " + describe_level(x));
  }
  return entries_[*k].m_hat;
}

MatchProbTable estimate_match_prob(const LinkedDataset& ds, FallbackPolicy policy) {
  auto levels = CovariateLevels::from_design(ds.design());
  const auto row_level = levels.assign(ds.design());
  const std::size_t L = levels.size();

  struct Counts {
    std::size_t rows = 0, matched = 0, unmatched = 0;
  };
  std::vector<std::array<Counts, 2>> counts(L);
  Counts global;
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    auto& c = counts[row_level[static_cast<std::size_t>(i)]][static_cast<std::size_t>(ds.y_star(i))];
    ++c.rows;
    if (ds.r(i) == 1) {
      const auto d = ds.d(i);
      if (!d) {
        throw DataIntegrityError("record " + std::to_string(i) +
                                 " is reviewed but has no match status");
      }
      (*d == 1 ? c.matched : c.unmatched) += 1;
      (*d == 1 ? global.matched : global.unmatched) += 1;
    }
  }
  if (global.matched + global.unmatched == 0) {
    throw EstimationError("no reviewed records: the match probability cannot be estimated");
  }

  std::vector<std::array<std::optional<MatchProbCell>, 2>> cells(L);
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t level_matched = counts[l][0].matched + counts[l][1].matched;
    const std::size_t level_unmatched = counts[l][0].unmatched + counts[l][1].unmatched;
    for (std::size_t y = 0; y < 2; ++y) {
      const Counts& c = counts[l][y];
      if (c.rows == 0) {
        continue;
      }
      MatchProbCell cell;
      if (c.matched + c.unmatched > 0) {
        cell = {0.0, c.matched, c.unmatched, Provenance::cell};
      } else if (policy == FallbackPolicy::strict) {
        throw EstimationError("no reviewed records in cell x = " + describe_level(levels.level(l)) +
                              ", y_star = " + std::to_string(y) + " (strict fallback policy)");
      } else if (level_matched + level_unmatched > 0) {
        cell = {0.0, level_matched, level_unmatched, Provenance::pooled_over_y};
      } else {
        cell = {0.0, global.matched, global.unmatched, Provenance::global};
      }
      cell.p_hat = static_cast<double>(cell.n_matched) /
                   static_cast<double>(cell.n_matched + cell.n_unmatched);
      cells[l][y] = cell;
    }
  }
  return MatchProbTable(std::move(levels), std::move(cells));
}

ResidualMomentTable estimate_residual_moment(const LinkedDataset& ds, const MatchProbTable& table,
                                             const Coefficients& beta) {
  if (beta.size() != ds.dim()) {
    throw DimensionError("residual moment: beta and covariates differ in dimension");
  }
  auto levels = CovariateLevels::from_design(ds.design());
  const auto row_level = levels.assign(ds.design());
  std::vector<std::size_t> table_level(levels.size());
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const auto k = table.levels().find(levels.level(l));
    if (!k) {
      throw DataIntegrityError("match probability table has no level " +
                               describe_level(levels.level(l)));
    }
    table_level[l] = *k;
  }

  std::vector<double> sums(levels.size(), 0.0);
  std::vector<ResidualMomentTable::Entry> entries(levels.size());
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    const std::size_t l = row_level[static_cast<std::size_t>(i)];
    const int y = ds.y_star(i);
    const double ph = table.p_hat(table_level[l], y);
    const double resid = y - logistic(ds.design().row(i).dot(beta.values()));
    sums[l] += ph * ph * resid * resid;
    ++entries[l].rows;
  }
  for (std::size_t l = 0; l < levels.size(); ++l) {
    entries[l].m_hat = sums[l] / static_cast<double>(entries[l].rows);
  }
  return ResidualMomentTable(std::move(levels), std::move(entries));
}

MatchProbTable oracle_table(const ScenarioConfig& config) {
  config.validate();
  auto levels = config.levels();
  std::vector<std::array<std::optional<MatchProbCell>, 2>> cells(levels.size());
  std::vector<std::optional<double>> level_prob(levels.size());
  for (std::size_t l = 0; l < levels.size(); ++l) {
    level_prob[l] = config.match_probability(l);
    for (int y = 0; y <= 1; ++y) {
      try {
        const double ph = true_match_prob(config, levels.level(l), y);
        cells[l][static_cast<std::size_t>(y)] = MatchProbCell{ph, 0, 0, Provenance::oracle};
      } catch (const DegenerateCellError&) {
        // y* = y has probability zero at this level; no record can land here.
      }
    }
  }
  return MatchProbTable(std::move(levels), std::move(cells), std::move(level_prob));
}

std::vector<double> record_weights(const LinkedDataset& ds, const MatchProbTable& table) {
  const auto n = static_cast<std::size_t>(ds.size());
  std::vector<double> w(n);
  // Cache level lookups: covariate support is small.
  const auto data_levels = CovariateLevels::from_design(ds.design());
  const auto row_level = data_levels.assign(ds.design());
  std::vector<std::optional<std::size_t>> table_level(data_levels.size());
  for (std::size_t l = 0; l < data_levels.size(); ++l) {
    table_level[l] = table.levels().find(data_levels.level(l));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (ds.r(ii) == 1) {
      const auto d = ds.d(ii);
      if (!d) {
        throw DataIntegrityError("record " + std::to_string(i) +
                                 " is reviewed but has no match status");
      }
      w[i] = *d;
      continue;
    }
    const auto& tl = table_level[row_level[i]];
    if (!tl) {
      throw DataIntegrityError("match probability table has no level " +
                               describe_level(data_levels.level(row_level[i])));
    }
    w[i] = table.p_hat(*tl, ds.y_star(ii));
  }
  return w;
}

}  // namespace linkreg
