#pragma once

#include "linkreg/model.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace linkreg {

// Orders covariate vectors lexicographically by value, breaking value ties
// (0.0 vs -0.0) on the bit pattern, so equality is bit-exact.
struct CovariateKeyLess {
  bool operator()(const std::vector<double>& a, const std::vector<double>& b) const noexcept;
};

/// The finite set of distinct covariate vectors ("levels" or "cells").
class CovariateLevels {
 public:
  CovariateLevels() = default;
  /// Levels in the given order; duplicates are rejected.
  explicit CovariateLevels(std::vector<Eigen::VectorXd> levels);
  /// Distinct rows of a design matrix, sorted by CovariateKeyLess.
  static CovariateLevels from_design(const RowMatrix& design);

  std::size_t size() const noexcept { return levels_.size(); }
  const Eigen::VectorXd& level(std::size_t k) const { return levels_.at(k); }
  const std::vector<Eigen::VectorXd>& levels() const noexcept { return levels_; }

  template <class Derived>
  std::optional<std::size_t> find(const Eigen::MatrixBase<Derived>& x) const {
    std::vector<double> key(static_cast<std::size_t>(x.size()));
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      key[static_cast<std::size_t>(k)] = x(k);
    }
    const auto it = index_.find(key);
    if (it == index_.end()) {
      return std::nullopt;
    }
    return it->second;
  }

  /// Level index of every design row; throws DataIntegrityError when a row is not a level.
  std::vector<std::size_t> assign(const RowMatrix& design) const;

 private:
  std::vector<Eigen::VectorXd> levels_;
  std::map<std::vector<double>, std::size_t, CovariateKeyLess> index_;
};

std::string describe_level(const Eigen::VectorXd& x);

}  // namespace linkreg
