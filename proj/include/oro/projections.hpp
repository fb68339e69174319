// Bregman projections onto the marginal constraint sets, their omega-
// overrelaxed versions, the scalar function phi behind the computable
// Lyapunov decrease, and the Lyapunov function itself relative to a
// reference plan.
#pragma once

#include <cmath>
#include <stdexcept>

#include "oro/core.hpp"

namespace oro {

// Selects the constraint set: row marginals equal mu1, or column marginals
// equal mu2.
enum class Axis { Rows, Cols };

// log((A_k gamma) / mu^k) for the implied plan of `state`, one stabilized
// kernel reduction. The overrelaxed update along the same axis is
// log-scaling -= omega * ratio.
inline Vector log_marginal_ratio(const ScalingState& st, const TransportProblem& p, Axis axis) {
  const Matrix lk = p.log_kernel();
  Vector out;
  if (axis == Axis::Rows) {
    detail::log_row_sums(lk, st.log_b, out);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += st.log_a[i] - std::log(p.mu1()[i]);
  } else {
    detail::log_col_sums(lk, st.log_a, out);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += st.log_b[j] - std::log(p.mu2()[j]);
  }
  if (!all_finite(out))
    throw std::runtime_error("marginal along the projection axis is zero or non-finite: "
                             "numerically collapsed plan");
  return out;
}

// P^omega: log-scaling increment is omega times the full-projection
// increment. omega = 0 is the identity, omega = 1 the Bregman projection,
// omega = 2 an involution.
inline ScalingState overrelaxed_project(ScalingState st, const TransportProblem& p, Axis axis,
                                        double omega) {
  if (!std::isfinite(omega)) throw std::invalid_argument("overrelaxed_project: omega must be finite");
  const Vector ratio = log_marginal_ratio(st, p, axis);
  Vector& v = (axis == Axis::Rows) ? st.log_a : st.log_b;
  for (std::size_t k = 0; k < v.size(); ++k) v[k] -= omega * ratio[k];
  return st;
}

inline ScalingState bregman_project(const ScalingState& st, const TransportProblem& p, Axis axis) {
  return overrelaxed_project(st, p, axis, 1.0);
}

// phi_omega(x) = x (1 - x^-omega) - omega log x. Written with log1p/expm1 so
// the value survives the catastrophic cancellation near x = 1, which is
// exactly where the adaptive rule probes it.
inline double phi(double omega, double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw std::domain_error("phi: x must be strictly positive");
  const double t = std::log1p(x - 1.0);  // log x
  return -x * std::expm1(-omega * t) - omega * t;
}

// d/domega phi_omega(x) = (x^(1-omega) - 1) log x
inline double phi_domega(double omega, double x) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw std::domain_error("phi_domega: x must be strictly positive");
  return (std::pow(x, 1.0 - omega) - 1.0) * std::log(x);
}

// F(gamma) - F(P^omega gamma) = <mu^k, phi_omega((A_k gamma) / mu^k)>,
// computed from the pre-projection state. Positive means the step decreases
// the Lyapunov function; callers decide whether to accept.
inline double lyapunov_decrease(const ScalingState& st, const TransportProblem& p, Axis axis,
                                double omega) {
  const Vector ratio = log_marginal_ratio(st, p, axis);
  const Vector& mu = (axis == Axis::Rows) ? p.mu1() : p.mu2();
  double acc = 0.0;
  for (std::size_t k = 0; k < ratio.size(); ++k) {
    const double r = std::max(std::exp(ratio[k]), std::numeric_limits<double>::min());
    acc += mu[k] * phi(omega, r);
  }
  return acc;
}

// F(gamma) = KL(reference, gamma). Test and telemetry support; the reference
// is unknown while a solve is running.
inline double lyapunov_reference(const TransportPlan& plan, const TransportPlan& reference_plan) {
  return kl_divergence(reference_plan.entries, plan.entries);
}

}  // namespace oro
