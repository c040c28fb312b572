#include "linkreg/kernels.hpp"

#include "linkreg/errors.hpp"

namespace linkreg {

namespace {

void check(const WeightedTerms& terms, const Eigen::VectorXd& beta) {
  const auto n = static_cast<std::size_t>(terms.size());
  if (terms.response.size() != n || terms.weight.size() != n) {
    throw DimensionError("weighted terms: response/weight length does not match design rows");
  }
  if (beta.size() != terms.dim()) {
    throw DimensionError("weighted terms: beta length does not match design columns");
  }
}

auto add_vec = [](Eigen::VectorXd& total, const Eigen::VectorXd& part) { total += part; };
auto add_mat = [](Eigen::MatrixXd& total, const Eigen::MatrixXd& part) { total += part; };

}  // namespace

Eigen::VectorXd weighted_score(const WeightedTerms& terms, const Eigen::VectorXd& beta,
                               Execution exec) {
  check(terms, beta);
  const Eigen::Index p = terms.dim();
  return blocked_reduce(
      terms.size(), Eigen::VectorXd(Eigen::VectorXd::Zero(p)),
      [&](Eigen::VectorXd& acc, Eigen::Index begin, Eigen::Index end) {
        for (Eigen::Index i = begin; i < end; ++i) {
          const auto x = terms.design.row(i);
          const double m = logistic(x.dot(beta));
          const auto k = static_cast<std::size_t>(i);
          acc.noalias() += (terms.weight[k] * (terms.response[k] - m)) * x.transpose();
        }
      },
      add_vec, exec);
}

Eigen::MatrixXd weighted_jacobian(const WeightedTerms& terms, const Eigen::VectorXd& beta,
                                  Execution exec) {
  check(terms, beta);
  const Eigen::Index p = terms.dim();
  return blocked_reduce(
      terms.size(), Eigen::MatrixXd(Eigen::MatrixXd::Zero(p, p)),
      [&](Eigen::MatrixXd& acc, Eigen::Index begin, Eigen::Index end) {
        for (Eigen::Index i = begin; i < end; ++i) {
          const auto x = terms.design.row(i);
          const double m = logistic(x.dot(beta));
          const double c = terms.weight[static_cast<std::size_t>(i)];
          acc.noalias() -= (c * m * (1.0 - m)) * x.transpose() * x;
        }
      },
      add_mat, exec);
}

Eigen::MatrixXd weighted_outer(const WeightedTerms& terms, const Eigen::VectorXd& beta,
                               Execution exec) {
  check(terms, beta);
  const Eigen::Index p = terms.dim();
  return blocked_reduce(
      terms.size(), Eigen::MatrixXd(Eigen::MatrixXd::Zero(p, p)),
      [&](Eigen::MatrixXd& acc, Eigen::Index begin, Eigen::Index end) {
        for (Eigen::Index i = begin; i < end; ++i) {
          const auto x = terms.design.row(i);
          const auto k = static_cast<std::size_t>(i);
          const double g = terms.weight[k] * (terms.response[k] - logistic(x.dot(beta)));
          acc.noalias() += (g * g) * x.transpose() * x;
        }
      },
      add_mat, exec);
}

namespace reference {

Eigen::VectorXd weighted_score(const WeightedTerms& terms, const Eigen::VectorXd& beta) {
  check(terms, beta);
  Eigen::VectorXd score = Eigen::VectorXd::Zero(terms.dim());
  for (Eigen::Index i = 0; i < terms.size(); ++i) {
    const Eigen::VectorXd x = terms.design.row(i).transpose();
    const auto k = static_cast<std::size_t>(i);
    score += terms.weight[k] * (terms.response[k] - logistic(x.dot(beta))) * x;
  }
  return score;
}

Eigen::MatrixXd weighted_jacobian(const WeightedTerms& terms, const Eigen::VectorXd& beta) {
  check(terms, beta);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(terms.dim(), terms.dim());
  for (Eigen::Index i = 0; i < terms.size(); ++i) {
    const Eigen::VectorXd x = terms.design.row(i).transpose();
    const double m = logistic(x.dot(beta));
    jac -= terms.weight[static_cast<std::size_t>(i)] * m * (1.0 - m) * (x * x.transpose());
  }
  return jac;
}

Eigen::MatrixXd weighted_outer(const WeightedTerms& terms, const Eigen::VectorXd& beta) {
  check(terms, beta);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(terms.dim(), terms.dim());
  for (Eigen::Index i = 0; i < terms.size(); ++i) {
    const Eigen::VectorXd x = terms.design.row(i).transpose();
    const auto k = static_cast<std::size_t>(i);
    const double g = terms.weight[k] * (terms.response[k] - logistic(x.dot(beta)));
    out += g * g * (x * x.transpose());
  }
  return out;
}

}  // namespace reference

}  // namespace linkreg
