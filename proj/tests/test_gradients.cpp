#include "gradient_suite.hpp"
#include "linkreg/kernels.hpp"

#include <doctest.h>

using namespace linkreg;

TEST_SUITE("gradients") {

TEST_CASE("analytic Jacobians agree with central differences") {
  const auto cases = support::run_gradient_suite();
  CHECK(cases.size() == 10 * 10 * 5);
  for (const auto& c : cases) {
    INFO(c.equation, " dataset ", c.dataset, " point ", c.point);
    CHECK(c.relative_error <= 1e-6);
  }
}

TEST_CASE("blocked kernels agree with the serial reference") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const Eigen::Index n : {1, 7, 4096, 4097, 20'000}) {
    RowMatrix X(n, 3);
    std::vector<double> y(static_cast<std::size_t>(n)), w(y.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      X(i, 0) = 1.0;
      X(i, 1) = u(rng) * 4 - 2;
      X(i, 2) = std::floor(u(rng) * 5);
      y[static_cast<std::size_t>(i)] = u(rng) < 0.4;
      w[static_cast<std::size_t>(i)] = u(rng);
    }
    const WeightedTerms t{X, y, w};
    const Eigen::Vector3d b(0.2, -0.5, 0.1);
    const auto s = weighted_score(t, b);
    CHECK(s == weighted_score(t, b, Execution::serial));
    CHECK(support::relative_error(s, reference::weighted_score(t, b)) <= 1e-12);
    const auto j = weighted_jacobian(t, b);
    CHECK(j == weighted_jacobian(t, b, Execution::serial));
    CHECK(support::relative_error(j, reference::weighted_jacobian(t, b)) <= 1e-12);
    const auto o = weighted_outer(t, b);
    CHECK(o == weighted_outer(t, b, Execution::serial));
    CHECK(support::relative_error(o, reference::weighted_outer(t, b)) <= 1e-12);
  }
}

}  // TEST_SUITE
