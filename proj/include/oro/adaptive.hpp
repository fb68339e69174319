// Safeguarded choice of the overrelaxation parameter: the largest omega in
// [1,2] keeping phi_omega(min ratio) nonnegative, found by safeguarded Newton
// iteration, then clamped by the security distance and the target theta0.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "oro/projections.hpp"

namespace oro {

// Largest omega in [1,2] with phi_omega(min_ratio) >= 0. For min_ratio >= 1
// phi is nonnegative on the whole interval and the sup is 2; otherwise
// omega -> phi_omega(min_ratio) is strictly decreasing and the unique root is
// located by Newton's method with a bisection safeguard on [1,2].
inline double theta_star(double min_ratio, double tol = 1e-9, int max_iter = 20,
                         double initial_guess = 1.5) {
  if (!(min_ratio > 0.0) || !std::isfinite(min_ratio))
    throw std::domain_error("theta_star: min_ratio must be strictly positive and finite");
  if (min_ratio >= 1.0) return 2.0;
  if (phi(2.0, min_ratio) >= 0.0) return 2.0;

  double lo = 1.0;  // phi_1 >= 0 everywhere
  double hi = 2.0;  // phi_2(min_ratio) < 0 here
  double w = std::clamp(initial_guess, 1.0 + 1e-12, 2.0 - 1e-12);
  for (int it = 0; it < max_iter; ++it) {
    const double g = phi(w, min_ratio);
    if (std::abs(g) <= tol) return w;
    if (g >= 0.0)
      lo = w;
    else
      hi = w;
    const double d = phi_domega(w, min_ratio);
    double next = w - g / d;
    if (!std::isfinite(next) || next <= lo || next >= hi) next = 0.5 * (lo + hi);
    w = next;
    if (hi - lo <= tol) break;
  }
  return w;
}

// Theta(u) = min(max(1, theta_star(min u) - delta), theta0)
inline double theta_safe(double min_ratio, const RelaxationConfig& cfg) {
  cfg.validate();
  const double ts = theta_star(min_ratio, cfg.newton_tol, cfg.newton_max_iter, cfg.theta0);
  return std::min(std::max(1.0, ts - cfg.delta), cfg.theta0);
}

// Safe parameter for the current iterate: theta_safe applied to the smallest
// coordinate of the marginal ratio along the chosen axis. Continuous in the
// plan, and guarantees a strict Lyapunov decrease whenever the plan is
// outside the constraint set.
inline double theta_for_state(const ScalingState& st, const TransportProblem& p, Axis axis,
                              const RelaxationConfig& cfg) {
  const Vector ratio = log_marginal_ratio(st, p, axis);
  const double m =
      std::max(std::exp(min_element(ratio)), std::numeric_limits<double>::min());
  return theta_safe(m, cfg);
}

}  // namespace oro
