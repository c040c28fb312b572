#include "linkreg/levels.hpp"

#include "linkreg/errors.hpp"

#include <bit>
#include <cstdint>
#include <sstream>

namespace linkreg {

bool CovariateKeyLess::operator()(const std::vector<double>& a,
                                  const std::vector<double>& b) const noexcept {
  if (a.size() != b.size()) {
    return a.size() < b.size();
  }
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] < b[k]) {
      return true;
    }
    if (b[k] < a[k]) {
      return false;
    }
    const auto ba = std::bit_cast<std::uint64_t>(a[k]);
    const auto bb = std::bit_cast<std::uint64_t>(b[k]);
    if (ba != bb) {
      return ba < bb;
    }
  }
  return false;
}

CovariateLevels::CovariateLevels(std::vector<Eigen::VectorXd> levels) : levels_(std::move(levels)) {
  for (std::size_t k = 0; k < levels_.size(); ++k) {
    std::vector<double> key(levels_[k].data(), levels_[k].data() + levels_[k].size());
    if (!index_.emplace(std::move(key), k).second) {
      throw ConfigError("duplicate covariate level " + describe_level(levels_[k]));
    }
  }
}

CovariateLevels CovariateLevels::from_design(const RowMatrix& design) {
  std::map<std::vector<double>, std::size_t, CovariateKeyLess> seen;
  std::vector<double> key(static_cast<std::size_t>(design.cols()));
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    for (Eigen::Index k = 0; k < design.cols(); ++k) {
      key[static_cast<std::size_t>(k)] = design(i, k);
    }
    seen.emplace(key, 0);
  }
  std::vector<Eigen::VectorXd> levels;
  levels.reserve(seen.size());
  for (const auto& [k, unused] : seen) {
    levels.push_back(Eigen::Map<const Eigen::VectorXd>(k.data(), static_cast<Eigen::Index>(k.size())));
  }
  return CovariateLevels(std::move(levels));
}

std::vector<std::size_t> CovariateLevels::assign(const RowMatrix& design) const {
  std::vector<std::size_t> out(static_cast<std::size_t>(design.rows()));
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    const auto k = find(design.row(i));
    if (!k) {
      throw DataIntegrityError("record " + std::to_string(i) + " has covariates " +
                               describe_level(design.row(i).transpose()) +
                               " outside the known covariate levels");
    }
    out[static_cast<std::size_t>(i)] = *k;
  }
  return out;
}

std::string describe_level(const Eigen::VectorXd& x) {
  std::ostringstream os;
  os.precision(17);
  os << '[';
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    os << (k ? ", " : "") << x[k];
  }
  os << ']';
  return os.str();
}

}  // namespace linkreg
