#include "linkreg/linkage_sim.hpp"

#include "linkreg/errors.hpp"
#include "linkreg/rng.hpp"

#include <cmath>
#include <string>

namespace linkreg {

namespace {

bool is_probability(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

void ScenarioConfig::validate() const {
  if (n == 0) {
    throw ConfigError("n must be positive");
  }
  if (covariate_levels.empty()) {
    throw ConfigError("at least one covariate level is required");
  }
  const Eigen::Index p = beta_true.size();
  double total = 0.0;
  for (std::size_t k = 0; k < covariate_levels.size(); ++k) {
    const auto& lvl = covariate_levels[k];
    if (lvl.x.size() != p) {
      throw ConfigError("covariate level " + std::to_string(k + 1) + " has " +
                        std::to_string(lvl.x.size()) + " entries but beta_true has " +
                        std::to_string(p));
    }
    if (!(std::isfinite(lvl.weight) && lvl.weight >= 0.0)) {
      throw ConfigError("covariate level " + std::to_string(k + 1) +
                        " has an invalid sampling weight");
    }
    total += lvl.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ConfigError("covariate level weights sum to " + std::to_string(total) +
                      ", expected 1 within 1e-12");
  }
  (void)levels();  // rejects duplicate levels

  std::visit(overloaded{
                 [](const ConstantMatch& m) {
                   if (!(std::isfinite(m.lambda) && m.lambda > 0.0 && m.lambda <= 1.0)) {
                     throw ConfigError("lambda must lie in (0, 1]");
                   }
                 },
                 [this](const CellMatch& m) {
                   if (m.lambda.size() != covariate_levels.size()) {
                     throw ConfigError("cell match table needs one lambda per covariate level");
                   }
                   for (double l : m.lambda) {
                     if (!(std::isfinite(l) && l > 0.0 && l <= 1.0)) {
                       throw ConfigError("every cell lambda must lie in (0, 1]");
                     }
                   }
                 },
             },
             match_model);
  std::visit(overloaded{
                 [](const PopulationMarginal&) {},
                 [this](const PerLevelRate& m) {
                   if (m.q.size() != covariate_levels.size()) {
                     throw ConfigError("per-level mismatch rates need one q per covariate level");
                   }
                   for (double q : m.q) {
                     if (!is_probability(q)) {
                       throw ConfigError("every mismatch rate q must lie in [0, 1]");
                     }
                   }
                 },
             },
             mismatch_model);
  if (!is_probability(review_probability)) {
    throw ConfigError("review_probability must lie in [0, 1]");
  }
}

std::size_t ScenarioConfig::dim() const { return static_cast<std::size_t>(beta_true.size()); }

CovariateLevels ScenarioConfig::levels() const {
  std::vector<Eigen::VectorXd> xs;
  xs.reserve(covariate_levels.size());
  for (const auto& lvl : covariate_levels) {
    xs.push_back(lvl.x.values());
  }
  return CovariateLevels(std::move(xs));
}

std::size_t ScenarioConfig::level_index(const Eigen::VectorXd& x) const {
  const auto k = levels().find(x);
  if (!k) {
    throw DataIntegrityError("covariates " + describe_level(x) +
                             " are not in the scenario's covariate support");
  }
  return *k;
}

double ScenarioConfig::match_probability(std::size_t level) const {
  return std::visit(overloaded{
                        [](const ConstantMatch& m) { return m.lambda; },
                        [level](const CellMatch& m) { return m.lambda.at(level); },
                    },
                    match_model);
}

double ScenarioConfig::mean(std::size_t level) const {
  return linkreg::mu(beta_true, covariate_levels.at(level).x);
}

double ScenarioConfig::mismatch_rate(std::size_t level) const {
  return std::visit(overloaded{
                        [this](const PopulationMarginal&) {
                          double q = 0.0;
                          for (std::size_t k = 0; k < covariate_levels.size(); ++k) {
                            q += covariate_levels[k].weight * mean(k);
                          }
                          return q;
                        },
                        [level](const PerLevelRate& m) { return m.q.at(level); },
                    },
                    mismatch_model);
}

LinkedDataset::LinkedDataset(RowMatrix design, std::vector<std::int8_t> y_star,
                             std::vector<std::int8_t> r, std::vector<std::int8_t> d,
                             std::vector<std::int8_t> y_latent,
                             std::optional<ScenarioConfig> config_echo)
    : design_(std::move(design)),
      y_star_(std::move(y_star)),
      r_(std::move(r)),
      d_(std::move(d)),
      y_latent_(std::move(y_latent)),
      config_(std::move(config_echo)) {
  const auto n = static_cast<std::size_t>(design_.rows());
  if (n == 0 || design_.cols() < 1) {
    throw DataIntegrityError("a linked dataset needs at least one record and one covariate");
  }
  if (y_star_.size() != n || r_.size() != n || d_.size() != n || y_latent_.size() != n) {
    throw DataIntegrityError("dataset columns have inconsistent lengths");
  }
  if (!design_.allFinite()) {
    throw DataIntegrityError("dataset covariates contain non-finite values");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = std::to_string(i);
    if (design_(static_cast<Eigen::Index>(i), 0) != 1.0) {
      throw DataIntegrityError("record " + row + ": first covariate must be 1");
    }
    if ((y_star_[i] != 0 && y_star_[i] != 1) || (r_[i] != 0 && r_[i] != 1)) {
      throw DataIntegrityError("record " + row + ": y_star and r must be 0 or 1");
    }
    if (d_[i] < -1 || d_[i] > 1 || y_latent_[i] < -1 || y_latent_[i] > 1) {
      throw DataIntegrityError("record " + row + ": d and y_latent must be 0, 1 or absent");
    }
    if (d_[i] == 1 && y_latent_[i] >= 0 && y_latent_[i] != y_star_[i]) {
      throw DataIntegrityError("record " + row +
                               ": a matched link must carry the true response");
    }
  }
}

LinkedDataset LinkedDataset::from_records(const std::vector<LinkedRecord>& records,
                                          std::optional<ScenarioConfig> config_echo) {
  if (records.empty()) {
    throw DataIntegrityError("a linked dataset needs at least one record");
  }
  const Eigen::Index p = records.front().x.size();
  const auto n = records.size();
  RowMatrix design(static_cast<Eigen::Index>(n), p);
  std::vector<std::int8_t> ys(n), r(n), d(n), yl(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = records[i];
    if (rec.x.size() != p) {
      throw DataIntegrityError("record " + std::to_string(i) + " has covariate dimension " +
                               std::to_string(rec.x.size()) + ", expected " + std::to_string(p));
    }
    design.row(static_cast<Eigen::Index>(i)) = rec.x.values().transpose();
    ys[i] = static_cast<std::int8_t>(rec.y_star);
    r[i] = static_cast<std::int8_t>(rec.r);
    d[i] = static_cast<std::int8_t>(rec.d.value_or(-1));
    yl[i] = static_cast<std::int8_t>(rec.y_latent.value_or(-1));
  }
  return LinkedDataset(std::move(design), std::move(ys), std::move(r), std::move(d),
                       std::move(yl), std::move(config_echo));
}

LinkedRecord LinkedDataset::record(Eigen::Index i) const {
  return LinkedRecord{Covariates(design_.row(i).transpose()), y_star(i), r(i), d(i), y_latent(i)};
}

bool LinkedDataset::has_ground_truth() const noexcept {
  for (std::size_t i = 0; i < d_.size(); ++i) {
    if (d_[i] < 0 || y_latent_[i] < 0) {
      return false;
    }
  }
  return true;
}

std::size_t LinkedDataset::reviewed_count() const noexcept {
  std::size_t count = 0;
  for (auto v : r_) {
    count += v == 1 ? 1 : 0;
  }
  return count;
}

bool operator==(const LinkedDataset& a, const LinkedDataset& b) {
  return a.design_.rows() == b.design_.rows() && a.design_.cols() == b.design_.cols() &&
         a.design_ == b.design_ && a.y_star_ == b.y_star_ && a.r_ == b.r_ && a.d_ == b.d_ &&
         a.y_latent_ == b.y_latent_;
}

LinkedDataset generate(const ScenarioConfig& config, Execution exec) {
  config.validate();
  const auto n = static_cast<Eigen::Index>(config.n);
  const auto p = static_cast<Eigen::Index>(config.dim());
  const std::size_t levels = config.covariate_levels.size();

  std::vector<double> cumulative(levels);
  std::vector<double> lambda(levels), mean(levels), q(levels);
  double acc = 0.0;
  for (std::size_t k = 0; k < levels; ++k) {
    acc += config.covariate_levels[k].weight;
    cumulative[k] = acc;
    lambda[k] = config.match_probability(k);
    mean[k] = config.mean(k);
    q[k] = config.mismatch_rate(k);
  }

  RowMatrix design(n, p);
  const auto un = static_cast<std::size_t>(n);
  std::vector<std::int8_t> ys(un), r(un), d(un), yl(un);

#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
  for (Eigen::Index i = 0; i < n; ++i) {
    auto rng = stream_for(config.seed, static_cast<std::uint64_t>(i));
    const double u = rng.uniform();
    std::size_t k = 0;
    while (k + 1 < levels && !(u < cumulative[k])) {
      ++k;
    }
    // Fixed draw order per record: level, y, d, mismatched y*, r.
    const int y = rng.bernoulli(mean[k]);
    const int match = rng.bernoulli(lambda[k]);
    const int y_mismatch = rng.bernoulli(q[k]);
    const int review = rng.bernoulli(config.review_probability);

    const auto s = static_cast<std::size_t>(i);
    design.row(i) = config.covariate_levels[k].x.values().transpose();
    yl[s] = static_cast<std::int8_t>(y);
    d[s] = static_cast<std::int8_t>(match);
    ys[s] = static_cast<std::int8_t>(match == 1 ? y : y_mismatch);
    r[s] = static_cast<std::int8_t>(review);
  }
  return LinkedDataset(std::move(design), std::move(ys), std::move(r), std::move(d),
                       std::move(yl), config);
}

LinkedDataset analysis_view(const LinkedDataset& ds) {
  std::vector<std::int8_t> d = ds.d_column();
  const auto& r = ds.r_column();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (r[i] == 0) {
      d[i] = -1;
    }
  }
  std::vector<std::int8_t> none(d.size(), -1);
  return LinkedDataset(ds.design(), ds.y_star_column(), r, std::move(d), std::move(none),
                       ds.config_echo());
}

double true_match_prob(const ScenarioConfig& config, const Eigen::VectorXd& x, int y_star) {
  if (y_star != 0 && y_star != 1) {
    throw DataIntegrityError("y_star must be 0 or 1");
  }
  const std::size_t k = config.level_index(x);
  const double lambda = config.match_probability(k);
  const double m = config.mean(k);
  const double q = config.mismatch_rate(k);
  const double like_match = y_star == 1 ? m : 1.0 - m;
  const double like_mismatch = y_star == 1 ? q : 1.0 - q;
  const double num = lambda * like_match;
  const double den = num + (1.0 - lambda) * like_mismatch;
  if (!(den > 0.0)) {
    throw DegenerateCellError("y_star = " + std::to_string(y_star) +
                              " has probability 0 at covariates " + describe_level(x));
  }
  // Equal branch likelihoods: the posterior is the prior, exactly.
  if (like_match == like_mismatch) {
    return lambda;
  }
  return num / den;
}

}  // namespace linkreg
