#include "linkreg/errors.hpp"
#include "linkreg/estimators.hpp"
#include "linkreg/inference.hpp"
#include "linkreg/match_prob.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace linkreg;

namespace {

// Independent enumeration of
//   (1-p) sum_x w(x) [ lambda(x) mu(1-mu) - sum_y P(Y*=y|x) pi(x,y)^2 (y-mu)^2 ] x x^T
// at the generating coefficients.
Eigen::MatrixXd two_term_oracle(const ScenarioConfig& c) {
  const auto p = static_cast<Eigen::Index>(c.dim());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t l = 0; l < c.covariate_levels.size(); ++l) {
    const Eigen::VectorXd x = c.covariate_levels[l].x.values();
    const double mu = support::sigmoid(x.dot(c.beta_true.values()));
    const double lam = c.match_probability(l), q = c.mismatch_rate(l);
    double term = lam * mu * (1 - mu);
    for (int y = 0; y <= 1; ++y) {
      const double py = lam * (y ? mu : 1 - mu) + (1 - lam) * (y ? q : 1 - q);
      const double pi = support::bayes_match_prob(lam, mu, q, y);
      term -= py * pi * pi * (y - mu) * (y - mu);
    }
    out += c.covariate_levels[l].weight * term * x * x.transpose();
  }
  return (1.0 - c.review_probability) * out;
}

ScenarioConfig symmetric_design(double lambda, double review) {
  return support::scenario(1000, 0.0, 0.0, {1.0, -1.0}, {0.5, 0.5}, lambda, review, 11);
}

bool within_se(const GapReport& g, const Eigen::MatrixXd& target, double k = 3.0) {
  return ((g.gap - target).cwiseAbs().array() <= k * g.gap_standard_error.array()).all();
}

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("positive definiteness examples") {
  const auto id = check_positive_definite(Eigen::MatrixXd::Identity(3, 3), 1e-9);
  CHECK(id.positive_definite);
  CHECK(id.min_eigenvalue == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_FALSE(check_positive_definite(Eigen::MatrixXd::Zero(2, 2)).positive_definite);
  const auto g = check_positive_definite(0.02 * Eigen::MatrixXd::Identity(2, 2));
  CHECK(g.positive_definite);
  CHECK(g.min_eigenvalue == doctest::Approx(0.02).epsilon(1e-14));
  Eigen::Matrix2d indefinite;
  indefinite << 1, 2, 2, 1;
  CHECK_FALSE(check_positive_definite(indefinite).positive_definite);
  CHECK(check_positive_definite(indefinite).min_eigenvalue == doctest::Approx(-1.0));
  // Only the symmetric part matters.
  Eigen::Matrix2d skewed;
  skewed << 1, 5, -5, 1;
  CHECK(check_positive_definite(skewed).positive_definite);
  Eigen::Matrix2d bad = Eigen::Matrix2d::Identity();
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(check_positive_definite(bad), NumericalError);
}

TEST_CASE("intercept-only oracle sandwich is the binomial variance") {
  ScenarioConfig c;
  c.n = 5000;
  c.seed = 8;
  c.beta_true = Coefficients(Eigen::VectorXd::Constant(1, 0.4));
  c.covariate_levels.push_back({Covariates(Eigen::VectorXd::Ones(1)), 1.0});
  c.match_model = ConstantMatch{0.9};
  c.review_probability = 0.5;
  const auto ds = generate(c);
  const auto fit = fit_oracle(ds);
  double ybar = 0;
  for (Eigen::Index i = 0; i < ds.size(); ++i) ybar += *ds.y_latent(i);
  ybar /= static_cast<double>(ds.size());
  REQUIRE(fit.covariance.has_value());
  CHECK((*fit.covariance)(0, 0) ==
        doctest::Approx(1.0 / (static_cast<double>(ds.size()) * ybar * (1 - ybar))).epsilon(1e-9));
}

TEST_CASE("sandwich properties") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 10; ++t) {
    const auto ds = support::random_dataset(rng, 400, 3);
    const auto seen = analysis_view(ds);
    const auto table = estimate_match_prob(seen);
    const auto eq = chipperfield_equation(seen, table);
    const auto fit = eq.solve(Coefficients::zeros(3), SolverOptions{});
    if (!fit.converged) continue;
    const auto s = sandwich(eq, fit);
    const double scale = s.covariance.cwiseAbs().maxCoeff();
    CHECK((s.covariance - s.covariance.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale);
    CHECK((s.covariance.diagonal().array() >= 0.0).all());
    CHECK(check_positive_definite(s.meat).min_eigenvalue >= -1e-12);
    // Closed form from the definition, built here from the contributions.
    const Eigen::MatrixXd G = eq.contributions(fit.beta.values());
    const Eigen::MatrixXd meat = G.transpose() * G / static_cast<double>(G.rows());
    CHECK((s.meat - meat).cwiseAbs().maxCoeff() <= 1e-12 * (1 + meat.cwiseAbs().maxCoeff()));
    const Eigen::MatrixXd bi = s.bread.inverse();
    const Eigen::MatrixXd cov = bi * meat * bi.transpose() / static_cast<double>(G.rows());
    CHECK((s.covariance - cov).cwiseAbs().maxCoeff() <= 1e-9 * scale);
  }

  FitResult unconverged;
  unconverged.beta = Coefficients::zeros(2);
  const auto ds = generate(support::standard_scenario());
  CHECK_THROWS_AS(sandwich(oracle_equation(ds), unconverged), NumericalError);
}

TEST_CASE("no false links: Chipperfield sandwich equals the oracle sandwich") {
  auto c = support::standard_scenario(14);
  c.match_model = ConstantMatch{1.0};
  const auto full = generate(c);
  const auto seen = analysis_view(full);
  const auto oracle = fit_oracle(full);
  const auto chip = fit_chipperfield(seen, estimate_match_prob(seen));
  CHECK((*chip.covariance - *oracle.covariance).cwiseAbs().maxCoeff() <=
        1e-8 * oracle.covariance->cwiseAbs().maxCoeff());
}

TEST_CASE("closed-form gap example") {
  const auto c = symmetric_design(0.8, 0.5);
  const auto cf = closed_form_gap(c, c.beta_true);
  CHECK((cf - 0.02 * Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-15);
  // Under the closed-form conditions the enumerated gap agrees exactly.
  CHECK((enumerate_score_moments(c, c.beta_true).gap() - cf).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("closed-form conditions") {
  const auto c = symmetric_design(0.8, 0.5);
  CHECK_FALSE(closed_form_violation(c, c.beta_true).has_value());

  auto slope = support::scenario(1000, 0.0, 0.3, {1.0, -1.0}, {0.5, 0.5}, 0.8, 0.5, 1);
  CHECK(closed_form_violation(slope, slope.beta_true).has_value());
  CHECK_THROWS_AS(closed_form_gap(slope, slope.beta_true), ConfigError);

  auto cells = c;
  cells.match_model = CellMatch{{0.8, 0.7}};
  CHECK(closed_form_violation(cells, cells.beta_true).has_value());

  auto rates = c;
  rates.mismatch_model = PerLevelRate{{0.3, 0.3}};
  CHECK(closed_form_violation(rates, rates.beta_true).has_value());

  CHECK(closed_form_violation(c, Coefficients(Eigen::Vector2d(0.2, 0.0))).has_value());

  auto single = support::scenario(1000, 0.0, 0.0, {1.0}, {1.0}, 0.8, 0.5, 1);
  CHECK(closed_form_violation(single, single.beta_true).has_value());

  CHECK_THROWS_AS(score_identity_audit(slope, slope.beta_true, 1000, AuditOptions{true}),
                  ConfigError);
  const auto g = score_identity_audit(slope, slope.beta_true, 1000);
  CHECK_FALSE(g.closed_form_gap.has_value());
  CHECK(g.closed_form_unavailable.has_value());
}

TEST_CASE("enumerated gap matches an independent two-term enumeration") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int t = 0; t < 50; ++t) {
    auto c = support::scenario(1000, 2 * u(rng) - 1, 2 * u(rng) - 1, {-2.0, 0.5, 1.5},
                               {0.3, 0.3, 0.4}, u(rng), u(rng), 1);
    if (t % 2) c.match_model = CellMatch{{u(rng), u(rng), u(rng)}};
    if (t % 3 == 0) c.mismatch_model = PerLevelRate{{u(rng), u(rng), u(rng)}};
    const Eigen::MatrixXd ref = two_term_oracle(c);
    const double scale = 1.0 + ref.cwiseAbs().maxCoeff();
    CHECK((enumerate_score_moments(c, c.beta_true).gap() - ref).cwiseAbs().maxCoeff() <=
          1e-13 * scale);
    CHECK((two_term_gap(c) - ref).cwiseAbs().maxCoeff() <= 1e-13 * scale);
  }
}

TEST_CASE("audit reproduces the positive definite gap") {
  const auto c = symmetric_design(0.8, 0.5);
  const auto g = score_identity_audit(c, c.beta_true, 1'000'000);
  REQUIRE(g.closed_form_gap.has_value());
  CHECK(within_se(g, *g.closed_form_gap));
  CHECK(g.positive_definite);
  CHECK(g.min_eigenvalue > 0.0);
  CHECK((g.gap - g.gap.transpose()).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((g.empirical_lhs - g.empirical_rhs - g.gap).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(g.n_mc == 1'000'000);
}

TEST_CASE("audit gap vanishes with full review or no false links") {
  for (const auto& c : {symmetric_design(0.8, 1.0), symmetric_design(1.0, 0.5)}) {
    const auto g = score_identity_audit(c, c.beta_true, 200'000);
    CHECK(within_se(g, Eigen::MatrixXd::Zero(2, 2)));
    CHECK(g.enumerated_gap.cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("audit agrees with the enumerated gap off the closed-form conditions") {
  auto c = support::standard_scenario();
  const auto g = score_identity_audit(c, c.beta_true, 400'000);
  CHECK(within_se(g, two_term_oracle(c)));
  CHECK(g.closed_form_unavailable.has_value());
  // Fewer reviews, larger gap.
  auto less = c;
  less.review_probability = 0.1;
  CHECK(two_term_gap(less).trace() > two_term_gap(c).trace());
}

TEST_CASE("audit is deterministic across execution modes") {
  const auto c = symmetric_design(0.8, 0.5);
  const auto a = score_identity_audit(c, c.beta_true, 50'000, AuditOptions{false, Execution::serial});
  const auto b = score_identity_audit(c, c.beta_true, 50'000, AuditOptions{false, Execution::parallel});
  CHECK(a.gap == b.gap);
  CHECK(a.gap_standard_error == b.gap_standard_error);
}

TEST_CASE("matched squared residual has the clean conditional mean") {
  // E[D (Y* - mu)^2 | X] = P(D = 1 | X) mu (1 - mu)
  auto c = support::standard_scenario(19);
  c.n = 400'000;
  c.match_model = CellMatch{{0.6, 0.9, 0.75, 0.8}};
  const auto ds = generate(c);
  const auto levels = c.levels();
  const auto idx = levels.assign(ds.design());
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const double mu = c.mean(l);
    double n = 0, s = 0, ss = 0;
    for (Eigen::Index i = 0; i < ds.size(); ++i) {
      if (idx[static_cast<std::size_t>(i)] != l) continue;
      const double v = *ds.d(i) * std::pow(ds.y_star(i) - mu, 2);
      ++n;
      s += v;
      ss += v * v;
    }
    const double mean = s / n;
    const double se = std::sqrt((ss / n - mean * mean) / n);
    CHECK(std::abs(mean - c.match_probability(l) * mu * (1 - mu)) <= 3.0 * se);
  }
}

TEST_CASE("optimal sandwich trace does not exceed Chipperfield's on the same data") {
  for (const std::uint64_t seed : {301u, 302u, 303u}) {
    auto c = support::standard_scenario(seed);
    c.n = 100'000;
    const auto seen = analysis_view(generate(c));
    const auto table = oracle_table(c);
    const auto chip = fit_chipperfield(seen, table);
    const auto opt = fit_optimal_two_step(seen, TwoStepOptions{}, {}, table);
    REQUIRE(chip.converged);
    REQUIRE(opt.fit.converged);
    CHECK(opt.fit.covariance->trace() <= chip.covariance->trace());
  }
}

}  // TEST_SUITE
