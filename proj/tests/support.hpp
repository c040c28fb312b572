#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library's solvers or enumerators; the point is to check them against
// something written differently.

#include "linkreg/linkage_sim.hpp"
#include "linkreg/model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace support {

using linkreg::RowMatrix;

// Logistic written through tanh instead of exp ratios.
inline double sigmoid(double t) { return 0.5 * (1.0 + std::tanh(0.5 * t)); }

inline double logit(double m) { return std::log(m / (1.0 - m)); }

/// Central differences of f at b with step h, one column per coordinate.
inline Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& b, double h = 1e-6) {
  const auto p = b.size();
  Eigen::MatrixXd J(f(b).size(), p);
  for (Eigen::Index k = 0; k < p; ++k) {
    Eigen::VectorXd up = b, down = b;
    up[k] += h;
    down[k] -= h;
    J.col(k) = (f(up) - f(down)) / (2.0 * h);
  }
  return J;
}

/// Root of the monotone decreasing function g on [lo, hi] by bisection.
inline double bisect_decreasing(const std::function<double(double)>& g, double lo, double hi) {
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Two-coefficient root of sum_i c_i x_i (t_i - sigmoid(x_i . b)) = 0 with
/// c_i >= 0 and x_i = (1, z_i), by nested bisection: for each slope the
/// intercept equation is monotone, and the profiled slope equation is monotone
/// because the weighted log-likelihood is concave.
inline Eigen::Vector2d nested_bisection_root(const std::vector<double>& z,
                                             const std::vector<double>& target,
                                             const std::vector<double>& c,
                                             double bound = 30.0) {
  auto intercept_for = [&](double slope) {
    return bisect_decreasing(
        [&](double a) {
          double s = 0.0;
          for (std::size_t i = 0; i < z.size(); ++i) s += c[i] * (target[i] - sigmoid(a + slope * z[i]));
          return s;
        },
        -bound, bound);
  };
  const double slope = bisect_decreasing(
      [&](double b) {
        const double a = intercept_for(b);
        double s = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) s += c[i] * z[i] * (target[i] - sigmoid(a + b * z[i]));
        return s;
      },
      -bound, bound);
  return {intercept_for(slope), slope};
}

/// Root for a saturated design (as many distinct levels as coefficients): each
/// level's fitted mean equals its weighted response mean, so the root solves
/// a linear system in logit space.
inline Eigen::VectorXd saturated_root(const RowMatrix& design, const std::vector<double>& y,
                                      const std::vector<double>& c) {
  std::vector<Eigen::VectorXd> levels;
  std::vector<double> num, den;
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    const Eigen::VectorXd x = design.row(i).transpose();
    std::size_t k = 0;
    while (k < levels.size() && levels[k] != x) ++k;
    if (k == levels.size()) {
      levels.push_back(x);
      num.push_back(0.0);
      den.push_back(0.0);
    }
    num[k] += c[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
    den[k] += c[static_cast<std::size_t>(i)];
  }
  const auto p = design.cols();
  Eigen::MatrixXd L(p, p);
  Eigen::VectorXd rhs(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    L.row(k) = levels.at(static_cast<std::size_t>(k)).transpose();
    rhs[k] = logit(num[static_cast<std::size_t>(k)] / den[static_cast<std::size_t>(k)]);
  }
  return L.fullPivLu().solve(rhs);
}

/// P(D = 1 | x, y*) by Bayes' rule from lambda, mean mu and mismatch rate q.
inline double bayes_match_prob(double lambda, double mu, double q, int y_star) {
  const double matched = lambda * (y_star ? mu : 1.0 - mu);
  const double mismatched = (1.0 - lambda) * (y_star ? q : 1.0 - q);
  return matched / (matched + mismatched);
}

/// Two-covariate scenario on levels (1, z_k) with the given weights.
inline linkreg::ScenarioConfig scenario(std::size_t n, double b0, double b1,
                                        const std::vector<double>& z,
                                        const std::vector<double>& w, double lambda,
                                        double review, std::uint64_t seed) {
  linkreg::ScenarioConfig c;
  c.n = n;
  c.seed = seed;
  c.beta_true = linkreg::Coefficients(Eigen::Vector2d(b0, b1));
  for (std::size_t k = 0; k < z.size(); ++k) {
    c.covariate_levels.push_back({linkreg::Covariates(Eigen::Vector2d(1.0, z[k])), w[k]});
  }
  c.match_model = linkreg::ConstantMatch{lambda};
  c.review_probability = review;
  return c;
}

/// The standard scenario used across the statistical tests.
inline linkreg::ScenarioConfig standard_scenario(std::uint64_t seed = 1) {
  return scenario(10'000, -0.5, 1.0, {-4.0, 1.0, 2.0, 3.0}, {0.25, 0.25, 0.25, 0.25}, 0.8, 0.5,
                  seed);
}

/// A small random dataset: p covariates (intercept + p-1 drawn from `levels`
/// integer values), arbitrary binary columns, every row reviewed with prob 1/2.
inline linkreg::LinkedDataset random_dataset(std::mt19937_64& rng, Eigen::Index n, Eigen::Index p,
                                             int levels = 4) {
  std::uniform_int_distribution<int> level(-levels / 2, levels / 2);
  std::bernoulli_distribution coin(0.5);
  RowMatrix X(n, p);
  std::vector<std::int8_t> ys(static_cast<std::size_t>(n)), r(ys.size()), d(ys.size()),
      yl(ys.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (Eigen::Index k = 1; k < p; ++k) X(i, k) = level(rng);
    const auto u = static_cast<std::size_t>(i);
    yl[u] = coin(rng);
    d[u] = coin(rng) || coin(rng);
    ys[u] = d[u] ? yl[u] : coin(rng);
    r[u] = coin(rng);
  }
  return linkreg::LinkedDataset(std::move(X), std::move(ys), std::move(r), std::move(d),
                                std::move(yl));
}

}  // namespace support
