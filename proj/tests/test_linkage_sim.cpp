#include "linkreg/errors.hpp"
#include "linkreg/linkage_sim.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace linkreg;

TEST_SUITE("linkage_sim") {

TEST_CASE("config validation rejects out-of-range fields") {
  auto base = support::standard_scenario();
  CHECK_NOTHROW(base.validate());

  auto c = base;
  c.n = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = base;
  c.match_model = ConstantMatch{0.0};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = base;
  c.match_model = ConstantMatch{1.0 + 1e-9};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = base;
  c.match_model = CellMatch{{0.5, 0.5}};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = base;
  c.mismatch_model = PerLevelRate{{0.1, 0.2, 1.5, 0.3}};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = base;
  c.review_probability = -0.1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = base;
  c.covariate_levels[0].weight = 0.3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = base;
  c.covariate_levels[1].x = c.covariate_levels[0].x;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = base;
  c.covariate_levels[2].x = Covariates(Eigen::Vector3d(1.0, 2.0, 3.0));
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("generation is deterministic and independent of execution mode") {
  const auto c = support::standard_scenario(42);
  const auto a = generate(c, Execution::parallel);
  const auto b = generate(c, Execution::serial);
  CHECK(a == b);
  CHECK(a == generate(c, Execution::parallel));
  auto other = c;
  other.seed = 43;
  CHECK_FALSE(a == generate(other));
  CHECK(a.size() == 10'000);
  CHECK(a.has_ground_truth());
  REQUIRE(a.config_echo().has_value());
  CHECK(a.config_echo()->seed == 42);
}

TEST_CASE("record i does not depend on n") {
  auto small = support::standard_scenario(9);
  small.n = 100;
  auto large = small;
  large.n = 5000;
  const auto a = generate(small);
  const auto b = generate(large);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    CHECK(a.record(i).y_star == b.record(i).y_star);
    CHECK(a.record(i).x == b.record(i).x);
  }
}

TEST_CASE("degenerate probabilities") {
  auto c = support::standard_scenario(5);
  c.review_probability = 1.0;
  const auto all = generate(c);
  CHECK(all.reviewed_count() == static_cast<std::size_t>(all.size()));

  c.review_probability = 0.0;
  CHECK(generate(c).reviewed_count() == 0);

  c.match_model = ConstantMatch{1.0};
  const auto exact = generate(c);
  for (Eigen::Index i = 0; i < exact.size(); ++i) {
    CHECK(exact.d(i) == 1);
    CHECK(exact.y_star(i) == exact.y_latent(i));
  }
}

TEST_CASE("match indicator frequency matches lambda") {
  auto c = support::standard_scenario(17);
  c.n = 100'000;
  const auto ds = generate(c);
  double sum = 0.0;
  for (const auto d : ds.d_column()) sum += d;
  const double mean = sum / static_cast<double>(ds.size());
  CHECK(std::abs(mean - 0.8) <= 3.0 * std::sqrt(0.8 * 0.2 / 1e5));
}

TEST_CASE("linked response mean and mismatch independence per cell") {
  auto c = support::standard_scenario(23);
  c.n = 400'000;
  const auto ds = generate(c);
  const auto levels = c.levels();
  const auto idx = levels.assign(ds.design());
  for (std::size_t l = 0; l < levels.size(); ++l) {
    // E[Y* | x, D = 1] = mu(beta_true, x)
    double n1 = 0, s1 = 0;
    // Correlation of y_latent and y_star among d = 0.
    double n0 = 0, sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
    for (Eigen::Index i = 0; i < ds.size(); ++i) {
      if (idx[static_cast<std::size_t>(i)] != l) continue;
      if (*ds.d(i) == 1) {
        ++n1;
        s1 += ds.y_star(i);
      } else {
        const double a = *ds.y_latent(i), b = ds.y_star(i);
        ++n0;
        sa += a;
        sb += b;
        sab += a * b;
        saa += a * a;
        sbb += b * b;
      }
    }
    const double m = c.mean(l);
    CHECK(std::abs(s1 / n1 - m) <= 3.0 * std::sqrt(m * (1 - m) / n1));
    const double cov = sab / n0 - (sa / n0) * (sb / n0);
    const double corr =
        cov / std::sqrt((saa / n0 - std::pow(sa / n0, 2)) * (sbb / n0 - std::pow(sb / n0, 2)));
    CHECK(std::abs(corr) <= 3.0 / std::sqrt(n0));
  }
}

TEST_CASE("mismatch rates") {
  auto c = support::standard_scenario();
  double marginal = 0.0;
  for (std::size_t l = 0; l < c.covariate_levels.size(); ++l) {
    marginal += 0.25 * support::sigmoid(-0.5 + c.covariate_levels[l].x[1]);
  }
  for (std::size_t l = 0; l < c.covariate_levels.size(); ++l) {
    CHECK(c.mismatch_rate(l) == doctest::Approx(marginal).epsilon(1e-14));
  }
  c.mismatch_model = PerLevelRate{{0.1, 0.2, 0.3, 0.4}};
  CHECK(c.mismatch_rate(2) == 0.3);
}

TEST_CASE("true match probability examples and Bayes oracle") {
  auto c = support::scenario(10, 0.0, 0.0, {1.0, -1.0}, {0.5, 0.5}, 0.8, 0.5, 1);
  const Eigen::Vector2d x(1.0, 1.0);
  CHECK(true_match_prob(c, x, 1) == 0.8);
  CHECK(true_match_prob(c, x, 0) == 0.8);

  // q = mu at every level gives lambda exactly.
  auto s = support::standard_scenario();
  std::vector<double> q;
  for (std::size_t l = 0; l < s.covariate_levels.size(); ++l) q.push_back(s.mean(l));
  s.mismatch_model = PerLevelRate{q};
  for (const auto& lvl : s.covariate_levels) {
    CHECK(true_match_prob(s, lvl.x.values(), 0) == 0.8);
    CHECK(true_match_prob(s, lvl.x.values(), 1) == 0.8);
  }

  auto one = support::standard_scenario();
  one.match_model = ConstantMatch{1.0};
  CHECK(true_match_prob(one, one.covariate_levels[0].x.values(), 1) == 1.0);

  // Random configs against the independent Bayes formula.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int t = 0; t < 200; ++t) {
    auto r = support::scenario(10, u(rng) - 0.5, u(rng) * 2 - 1, {-1.0, 0.5, 2.0}, {0.2, 0.5, 0.3},
                               u(rng), 0.5, 1);
    const std::vector<double> lam{u(rng), u(rng), u(rng)};
    const std::vector<double> qq{u(rng), u(rng), u(rng)};
    r.match_model = CellMatch{lam};
    r.mismatch_model = PerLevelRate{qq};
    for (std::size_t l = 0; l < 3; ++l) {
      for (int y = 0; y <= 1; ++y) {
        const double ref = support::bayes_match_prob(lam[l], r.mean(l), qq[l], y);
        CHECK(std::abs(true_match_prob(r, r.covariate_levels[l].x.values(), y) - ref) <= 1e-14);
      }
    }
  }

  // Off-support covariates are rejected.
  CHECK_THROWS_AS(true_match_prob(c, Eigen::Vector2d(1.0, 5.0), 1), DataIntegrityError);
}

TEST_CASE("analysis view drops what an analyst cannot see") {
  const auto ds = generate(support::standard_scenario(3));
  const auto view = analysis_view(ds);
  CHECK(view == analysis_view(view));
  CHECK_FALSE(view.has_ground_truth());
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    CHECK_FALSE(view.y_latent(i).has_value());
    CHECK(view.y_star(i) == ds.y_star(i));
    CHECK(view.r(i) == ds.r(i));
    if (ds.r(i) == 1) {
      CHECK(view.d(i) == ds.d(i));
    } else {
      CHECK_FALSE(view.d(i).has_value());
    }
  }
}

TEST_CASE("dataset invariants") {
  RowMatrix X(2, 2);
  X << 1, 0, 1, 1;
  using V = std::vector<std::int8_t>;
  CHECK_NOTHROW(LinkedDataset(X, V{0, 1}, V{1, 0}, V{1, -1}, V{0, -1}));
  // matched record whose observed response differs from the true one
  CHECK_THROWS_AS(LinkedDataset(X, V{0, 1}, V{1, 0}, V{1, -1}, V{1, -1}), DataIntegrityError);
  CHECK_THROWS_AS(LinkedDataset(X, V{0, 2}, V{1, 0}, V{1, -1}, V{0, -1}), DataIntegrityError);
  CHECK_THROWS_AS(LinkedDataset(X, V{0}, V{1, 0}, V{1, -1}, V{0, -1}), DataIntegrityError);
  RowMatrix bad = X;
  bad(1, 0) = 2.0;
  CHECK_THROWS_AS(LinkedDataset(bad, V{0, 1}, V{1, 0}, V{1, -1}, V{0, -1}), DataIntegrityError);

  const auto ds = LinkedDataset::from_records(
      {LinkedRecord{Covariates(Eigen::Vector2d(1, 3)), 1, 1, 1, 1},
       LinkedRecord{Covariates(Eigen::Vector2d(1, 4)), 0, 0, std::nullopt, std::nullopt}});
  CHECK(ds.size() == 2);
  CHECK(ds.reviewed_count() == 1);
  CHECK(ds.record(1).x[1] == 4.0);
  CHECK_FALSE(ds.record(1).d.has_value());
}

}  // TEST_SUITE
