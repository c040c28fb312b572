#pragma once

// Synthetic linked files with false-positive links and a Bernoulli clerical
// review sample.
//
// Generative model for record i, given a ScenarioConfig:
//   x        ~ categorical over covariate_levels (by weight)
//   y_latent ~ Bernoulli(mu(beta_true, x))
//   d        ~ Bernoulli(lambda(x))
//   y_star   = y_latent               if d = 1
//            ~ Bernoulli(q(x))        if d = 0, independent of y_latent
//   r        ~ Bernoulli(review_probability), independent of everything
//
// Because y_star | d = 0 ignores y_latent, E[Y | X, Y*, D = 0] = E[Y | X]
// holds by construction. Unlinked records are not generated.

#include "linkreg/kernels.hpp"
#include "linkreg/levels.hpp"
#include "linkreg/model.hpp"

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

namespace linkreg {

struct CovariateLevel {
  Covariates x;
  double weight = 0.0;
};

/// Same match probability lambda for every covariate level.
struct ConstantMatch {
  double lambda = 1.0;
};

/// One match probability per covariate level, in covariate_levels order.
struct CellMatch {
  std::vector<double> lambda;
};

using MatchModel = std::variant<ConstantMatch, CellMatch>;

/// q(x) = sum over levels of weight * mu(beta_true, level): a false link carries
/// the response of a random member of the population.
struct PopulationMarginal {};

/// q(x) given per covariate level, in covariate_levels order.
struct PerLevelRate {
  std::vector<double> q;
};

using MismatchModel = std::variant<PopulationMarginal, PerLevelRate>;

struct ScenarioConfig {
  std::size_t n = 0;
  Coefficients beta_true = Coefficients::zeros(1);
  std::vector<CovariateLevel> covariate_levels;
  MatchModel match_model = ConstantMatch{};
  MismatchModel mismatch_model = PopulationMarginal{};
  double review_probability = 0.0;
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the first violated constraint.
  void validate() const;

  std::size_t dim() const;
  CovariateLevels levels() const;
  std::size_t level_index(const Eigen::VectorXd& x) const;

  double match_probability(std::size_t level) const;  // lambda(x)
  double mismatch_rate(std::size_t level) const;      // q(x)
  double mean(std::size_t level) const;               // mu(beta_true, x)
};

struct LinkedRecord {
  Covariates x;
  int y_star = 0;
  int r = 0;
  std::optional<int> d;
  std::optional<int> y_latent;
};

/// Column store of linked records. d and y_latent are stored with -1 for "absent".
class LinkedDataset {
 public:
  LinkedDataset(RowMatrix design, std::vector<std::int8_t> y_star, std::vector<std::int8_t> r,
                std::vector<std::int8_t> d, std::vector<std::int8_t> y_latent,
                std::optional<ScenarioConfig> config_echo = std::nullopt);
  static LinkedDataset from_records(const std::vector<LinkedRecord>& records,
                                    std::optional<ScenarioConfig> config_echo = std::nullopt);

  Eigen::Index size() const noexcept { return design_.rows(); }
  Eigen::Index dim() const noexcept { return design_.cols(); }

  const RowMatrix& design() const noexcept { return design_; }
  int y_star(Eigen::Index i) const { return y_star_[idx(i)]; }
  int r(Eigen::Index i) const { return r_[idx(i)]; }
  std::optional<int> d(Eigen::Index i) const { return opt(d_[idx(i)]); }
  std::optional<int> y_latent(Eigen::Index i) const { return opt(y_latent_[idx(i)]); }
  LinkedRecord record(Eigen::Index i) const;

  // Raw columns (-1 = absent for d / y_latent).
  const std::vector<std::int8_t>& y_star_column() const noexcept { return y_star_; }
  const std::vector<std::int8_t>& r_column() const noexcept { return r_; }
  const std::vector<std::int8_t>& d_column() const noexcept { return d_; }
  const std::vector<std::int8_t>& y_latent_column() const noexcept { return y_latent_; }

  bool has_ground_truth() const noexcept;  // y_latent and d present on every row
  std::size_t reviewed_count() const noexcept;
  const std::optional<ScenarioConfig>& config_echo() const noexcept { return config_; }

  friend bool operator==(const LinkedDataset& a, const LinkedDataset& b);

 private:
  static std::size_t idx(Eigen::Index i) { return static_cast<std::size_t>(i); }
  static std::optional<int> opt(std::int8_t v) {
    return v < 0 ? std::nullopt : std::optional<int>(v);
  }

  RowMatrix design_;
  std::vector<std::int8_t> y_star_;
  std::vector<std::int8_t> r_;
  std::vector<std::int8_t> d_;
  std::vector<std::int8_t> y_latent_;
  std::optional<ScenarioConfig> config_;
};

/// Simulates config.n records. Deterministic in (config, seed) and independent
/// of thread count: record i draws from its own stream stream_for(seed, i).
LinkedDataset generate(const ScenarioConfig& config, Execution exec = Execution::parallel);

/// What an analyst sees: y_latent dropped everywhere, d dropped where r = 0.
LinkedDataset analysis_view(const LinkedDataset& ds);

/// Exact P(D = 1 | X = x, Y* = y_star) under the generative model (Bayes' rule).
/// Throws DegenerateCellError when y_star has probability 0 under both branches.
double true_match_prob(const ScenarioConfig& config, const Eigen::VectorXd& x, int y_star);

}  // namespace linkreg
