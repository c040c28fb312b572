// Times the serial reference kernels against the blocked OpenMP kernels, plus
// data generation and a small Monte Carlo run in both execution modes.
//
//   kernel_bench [records] [repeats]

#include "linkreg/kernels.hpp"
#include "linkreg/linkage_sim.hpp"
#include "linkreg/match_prob.hpp"
#include "linkreg/monte_carlo.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>

using namespace linkreg;

namespace {

double seconds(const std::function<void()>& fn, int repeats) {
  const auto start = std::chrono::steady_clock::now();
  for (int k = 0; k < repeats; ++k) fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / repeats;
}

void row(const char* name, double serial, double parallel, double max_diff) {
  std::printf("%-22s %12.6f %12.6f %8.2fx   max|diff| %.3g\n", name, serial, parallel,
              serial / parallel, max_diff);
}

ScenarioConfig scenario(std::size_t n) {
  ScenarioConfig c;
  c.n = n;
  c.seed = 7;
  c.beta_true = Coefficients(Eigen::Vector2d(-0.5, 1.0));
  for (const double v : {-4.0, 1.0, 2.0, 3.0}) {
    c.covariate_levels.push_back({Covariates(Eigen::Vector2d(1.0, v)), 0.25});
  }
  c.match_model = ConstantMatch{0.8};
  c.review_probability = 0.5;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1'000'000;
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 5;
  std::printf("records %zu, repeats %d, threads %d\n", n, repeats, omp_get_max_threads());
  std::printf("%-22s %12s %12s %9s\n", "kernel", "serial [s]", "parallel [s]", "speedup");

  const auto config = scenario(n);
  LinkedDataset ds = generate(config, Execution::parallel);
  const auto weights = record_weights(ds, oracle_table(config));
  const std::vector<double> y(ds.y_star_column().begin(), ds.y_star_column().end());
  const WeightedTerms terms{ds.design(), y, weights};
  const Eigen::VectorXd beta = config.beta_true.values();

  {
    const auto a = reference::weighted_score(terms, beta);
    const auto b = weighted_score(terms, beta, Execution::parallel);
    row("score", seconds([&] { (void)reference::weighted_score(terms, beta); }, repeats),
        seconds([&] { (void)weighted_score(terms, beta, Execution::parallel); }, repeats),
        (a - b).cwiseAbs().maxCoeff());
  }
  {
    const auto a = reference::weighted_jacobian(terms, beta);
    const auto b = weighted_jacobian(terms, beta, Execution::parallel);
    row("jacobian", seconds([&] { (void)reference::weighted_jacobian(terms, beta); }, repeats),
        seconds([&] { (void)weighted_jacobian(terms, beta, Execution::parallel); }, repeats),
        (a - b).cwiseAbs().maxCoeff());
  }
  {
    const auto a = reference::weighted_outer(terms, beta);
    const auto b = weighted_outer(terms, beta, Execution::parallel);
    row("outer", seconds([&] { (void)reference::weighted_outer(terms, beta); }, repeats),
        seconds([&] { (void)weighted_outer(terms, beta, Execution::parallel); }, repeats),
        (a - b).cwiseAbs().maxCoeff());
  }
  {
    const bool same = generate(config, Execution::serial) == ds;
    row("generate", seconds([&] { (void)generate(config, Execution::serial); }, 1),
        seconds([&] { (void)generate(config, Execution::parallel); }, 1), same ? 0.0 : 1.0);
  }
  {
    MCConfig mc;
    mc.scenario = scenario(10'000);
    mc.replications = 64;
    mc.estimators = {EstimatorKind::oracle, EstimatorKind::naive, EstimatorKind::chipperfield,
                     EstimatorKind::optimal};
    mc.base_seed = 1;
    mc.bootstrap_resamples = 200;
    MCReport serial, parallel;
    const double ts = seconds([&] { serial = run_mc(mc, Execution::serial); }, 1);
    const double tp = seconds([&] { parallel = run_mc(mc, Execution::parallel); }, 1);
    double diff = 0.0;
    for (std::size_t e = 0; e < serial.estimators.size(); ++e) {
      diff = std::max(diff, (serial.estimators[e].mean_beta - parallel.estimators[e].mean_beta)
                                .cwiseAbs()
                                .maxCoeff());
    }
    row("monte carlo (64 reps)", ts, tp, diff);
  }
  return 0;
}
