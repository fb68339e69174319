// Problem instance types: the immutable transport problem, strictly positive
// transport plans, and the configuration of the safeguarded overrelaxation rule.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "oro/matrix.hpp"

namespace oro {

// Cost matrix, marginals and regularization strength. Validated on
// construction and immutable afterwards, so instances can be shared freely
// across threads.
class TransportProblem {
 public:
  TransportProblem(Matrix cost, Vector mu1, Vector mu2, double epsilon)
      : cost_(std::move(cost)), mu1_(std::move(mu1)), mu2_(std::move(mu2)), epsilon_(epsilon) {
    if (cost_.rows() == 0 || cost_.cols() == 0)
      throw std::invalid_argument("TransportProblem: cost matrix is empty");
    if (mu1_.size() != cost_.rows() || mu2_.size() != cost_.cols())
      throw std::invalid_argument(
          "TransportProblem: marginal dimensions do not match the cost matrix (" +
          std::to_string(mu1_.size()) + " rows, " + std::to_string(mu2_.size()) + " cols vs " +
          std::to_string(cost_.rows()) + "x" + std::to_string(cost_.cols()) + ")");
    if (!(epsilon_ > 0.0) || !std::isfinite(epsilon_))
      throw std::invalid_argument("TransportProblem: epsilon must be strictly positive and finite");
    if (!all_finite(cost_)) throw std::invalid_argument("TransportProblem: cost entries must be finite");
    for (double m : mu1_)
      if (!(m > 0.0) || !std::isfinite(m))
        throw std::invalid_argument("TransportProblem: mu1 entries must be strictly positive");
    for (double m : mu2_)
      if (!(m > 0.0) || !std::isfinite(m))
        throw std::invalid_argument("TransportProblem: mu2 entries must be strictly positive");
    const double s1 = sum(mu1_);
    const double s2 = sum(mu2_);
    if (std::abs(s1 - s2) > 1e-12 * std::max(s1, s2))
      throw std::invalid_argument("TransportProblem: total masses differ (sum mu1 = " +
                                  std::to_string(s1) + ", sum mu2 = " + std::to_string(s2) + ")");
  }

  std::size_t n1() const { return cost_.rows(); }
  std::size_t n2() const { return cost_.cols(); }
  const Matrix& cost() const { return cost_; }
  const Vector& mu1() const { return mu1_; }
  const Vector& mu2() const { return mu2_; }
  double epsilon() const { return epsilon_; }

  // Entrywise -cost/epsilon, the log of the Gibbs kernel. Representable for
  // any epsilon, unlike the kernel itself.
  Matrix log_kernel() const {
    Matrix lk(n1(), n2());
    for (std::size_t i = 0; i < n1(); ++i)
      for (std::size_t j = 0; j < n2(); ++j) lk(i, j) = -cost_(i, j) / epsilon_;
    return lk;
  }

 private:
  Matrix cost_;
  Vector mu1_;
  Vector mu2_;
  double epsilon_;
};

// A transport plan in the strictly positive orthant.
struct TransportPlan {
  Matrix entries;
};

// Parameters of the safeguarded overrelaxation rule: target parameter theta0,
// security distance delta, and the tolerances of the one-dimensional root
// finder behind the safe-parameter computation.
struct RelaxationConfig {
  double theta0 = 1.8;
  double delta = 0.01;
  double newton_tol = 1e-9;
  int newton_max_iter = 20;

  void validate() const {
    if (!(theta0 >= 1.0) || !(theta0 < 2.0))
      throw std::invalid_argument("RelaxationConfig: theta0 must lie in [1, 2)");
    if (!(delta > 0.0) || !(delta < 1.0))
      throw std::invalid_argument("RelaxationConfig: delta must lie in (0, 1)");
    if (!(newton_tol > 0.0)) throw std::invalid_argument("RelaxationConfig: newton_tol must be positive");
    if (newton_max_iter <= 0)
      throw std::invalid_argument("RelaxationConfig: newton_max_iter must be positive");
  }
};

}  // namespace oro
