#pragma once

// Per-record reductions shared by every estimating equation in the library.
//
// All estimating functions here have the form
//     G(beta) = sum_i c_i x_i (y_i - mu_i(beta))
// with record weights c_i that do not depend on beta. The kernels compute G,
// its Jacobian -sum_i c_i mu_i (1 - mu_i) x_i x_i^T, and the outer-product sum
// sum_i c_i^2 (y_i - mu_i)^2 x_i x_i^T used by the sandwich.
//
// The blocked kernels split records into fixed-size blocks, reduce blocks in
// parallel (OpenMP) and add the block partials in index order, so the result
// is bit-identical for any thread count. The reference:: versions are plain
// serial loops kept for testing and benchmarking.

#include "linkreg/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <span>
#include <vector>

namespace linkreg {

enum class Execution { serial, parallel };

struct WeightedTerms {
  const RowMatrix& design;
  std::span<const double> response;
  std::span<const double> weight;

  Eigen::Index size() const noexcept { return design.rows(); }
  Eigen::Index dim() const noexcept { return design.cols(); }
};

inline constexpr Eigen::Index kBlockSize = 4096;

/// Deterministic blocked reduction. `body(acc, begin, end)` accumulates records
/// [begin, end) into acc; `combine(total, part)` folds block partials in order.
template <class Acc, class Body, class Combine>
Acc blocked_reduce(Eigen::Index n, const Acc& zero, Body body, Combine combine,
                   Execution exec = Execution::parallel) {
  const Eigen::Index blocks = (n + kBlockSize - 1) / kBlockSize;
  std::vector<Acc> partial(static_cast<std::size_t>(blocks), zero);
  const bool par = exec == Execution::parallel && blocks > 1;
#pragma omp parallel for schedule(static) if (par)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index begin = b * kBlockSize;
    const Eigen::Index end = std::min(n, begin + kBlockSize);
    body(partial[static_cast<std::size_t>(b)], begin, end);
  }
  Acc total = zero;
  for (const auto& part : partial) {
    combine(total, part);
  }
  return total;
}

Eigen::VectorXd weighted_score(const WeightedTerms& terms, const Eigen::VectorXd& beta,
                               Execution exec = Execution::parallel);
Eigen::MatrixXd weighted_jacobian(const WeightedTerms& terms, const Eigen::VectorXd& beta,
                                  Execution exec = Execution::parallel);
Eigen::MatrixXd weighted_outer(const WeightedTerms& terms, const Eigen::VectorXd& beta,
                               Execution exec = Execution::parallel);

namespace reference {

Eigen::VectorXd weighted_score(const WeightedTerms& terms, const Eigen::VectorXd& beta);
Eigen::MatrixXd weighted_jacobian(const WeightedTerms& terms, const Eigen::VectorXd& beta);
Eigen::MatrixXd weighted_outer(const WeightedTerms& terms, const Eigen::VectorXd& beta);

}  // namespace reference

}  // namespace linkreg
