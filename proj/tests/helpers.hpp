// Shared test utilities: seeded generators and independent oracles. Oracles
// here deliberately use plain-domain arithmetic and direct formulas so they
// share no code path with the log-domain implementation they check.
#pragma once

#include <cmath>
#include <stdexcept>

#include "oro/oro.hpp"

namespace testutil {

using oro::Matrix;
using oro::TransportPlan;
using oro::TransportProblem;
using oro::Vector;

// Random problem with uniform [0,1) costs and random positive marginals
// balanced to equal mass.
inline TransportProblem random_problem(oro::Xoshiro256PlusPlus& rng, std::size_t n1,
                                       std::size_t n2, double epsilon) {
  Matrix cost(n1, n2);
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < n2; ++j) cost(i, j) = rng.uniform();
  Vector mu1(n1), mu2(n2);
  double s1 = 0.0, s2 = 0.0;
  for (auto& m : mu1) s1 += (m = 0.2 + rng.uniform());
  for (auto& m : mu2) s2 += (m = 0.2 + rng.uniform());
  for (auto& m : mu1) m /= s1;
  for (auto& m : mu2) m /= s2;
  return TransportProblem(std::move(cost), std::move(mu1), std::move(mu2), epsilon);
}

// Encodes an arbitrary strictly positive matrix as the Gibbs kernel of a
// problem (cost = -eps log M), so the zero state's implied plan is exactly M.
inline TransportProblem problem_from_plan(const Matrix& plan, Vector mu1, Vector mu2,
                                          double epsilon = 1.0) {
  Matrix cost(plan.rows(), plan.cols());
  for (std::size_t i = 0; i < plan.rows(); ++i)
    for (std::size_t j = 0; j < plan.cols(); ++j) {
      if (!(plan(i, j) > 0.0)) throw std::invalid_argument("problem_from_plan: plan must be positive");
      cost(i, j) = -epsilon * std::log(plan(i, j));
    }
  return TransportProblem(std::move(cost), std::move(mu1), std::move(mu2), epsilon);
}

inline Matrix random_positive_matrix(oro::Xoshiro256PlusPlus& rng, std::size_t n1, std::size_t n2,
                                     double log_spread = 2.0) {
  Matrix m(n1, n2);
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < n2; ++j)
      m(i, j) = std::exp(log_spread * (2.0 * rng.uniform() - 1.0));
  return m;
}

// Feasible plan by plain alternating normalization, independent of the
// log-domain solver.
inline Matrix plain_feasible_plan(oro::Xoshiro256PlusPlus& rng, const Vector& mu1,
                                  const Vector& mu2, int rounds = 600) {
  Matrix m = random_positive_matrix(rng, mu1.size(), mu2.size(), 1.0);
  for (int r = 0; r < rounds; ++r) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j);
      for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) *= mu1[i] / s;
    }
    for (std::size_t j = 0; j < m.cols(); ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < m.rows(); ++i) s += m(i, j);
      for (std::size_t i = 0; i < m.rows(); ++i) m(i, j) *= mu2[j] / s;
    }
  }
  return m;
}

// KL(gamma, xi) by the direct formula; oracle counterpart of the library's.
inline double kl_oracle(const Matrix& gamma, const Matrix& xi) {
  double acc = 0.0;
  for (std::size_t k = 0; k < gamma.size(); ++k) {
    const double g = gamma.data()[k];
    const double x = xi.data()[k];
    acc += (g > 0.0 ? g * (std::log(g / x) - 1.0) : 0.0) + x;
  }
  return acc;
}

// Plain-domain overrelaxed projection of a plan: scale each row (or column)
// by ratio^-omega where ratio compares the marginal to its target.
inline Matrix plan_overrelax_oracle(const Matrix& plan, const Vector& mu, oro::Axis axis,
                                    double omega) {
  Matrix out = plan;
  if (axis == oro::Axis::Rows) {
    for (std::size_t i = 0; i < plan.rows(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < plan.cols(); ++j) s += plan(i, j);
      const double factor = std::pow(s / mu[i], -omega);
      for (std::size_t j = 0; j < plan.cols(); ++j) out(i, j) *= factor;
    }
  } else {
    for (std::size_t j = 0; j < plan.cols(); ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < plan.rows(); ++i) s += plan(i, j);
      const double factor = std::pow(s / mu[j], -omega);
      for (std::size_t i = 0; i < plan.rows(); ++i) out(i, j) *= factor;
    }
  }
  return out;
}

// Root of omega -> phi_omega(m) on [1,2] by pure bisection; oracle for the
// Newton-based theta_star.
inline double bisect_theta_star(double m) {
  auto phi = [&](double w) { return m * (1.0 - std::pow(m, -w)) - w * std::log(m); };
  if (m >= 1.0 || phi(2.0) >= 0.0) return 2.0;
  double lo = 1.0, hi = 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (phi(mid) >= 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

inline double max_abs_diff(const Vector& a, const Vector& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

inline double max_rel_diff(const Matrix& a, const Matrix& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, rel_diff(a.data()[k], b.data()[k]));
  return d;
}

}  // namespace testutil
