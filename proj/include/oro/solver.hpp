// Iteration drivers: plain Sinkhorn-Knopp, fixed-omega overrelaxation and the
// safeguarded adaptive scheme, all running through one log-domain loop so the
// methods differ only in how each half-step's omega is chosen.
#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "oro/adaptive.hpp"
#include "oro/core.hpp"
#include "oro/projections.hpp"

namespace oro {

enum class Method { Sinkhorn, FixedOmega, Adaptive };

enum class TerminationStatus { Converged, MaxIterations, Diverged };

struct SolveConfig {
  Method method = Method::Sinkhorn;
  double omega = 1.0;             // FixedOmega: must lie in (0, 2)
  RelaxationConfig relaxation{};  // Adaptive
  double tol = 1e-9;              // L-inf marginal residual threshold
  std::size_t max_iter = 100000;

  bool record_telemetry = false;
  bool record_dual_objective = true;  // with telemetry: adds one full kernel pass per iteration
  bool record_state_history = false;

  // Dual-variable stopping. With a reference, the solve stops once the
  // gauge-fixed ||alpha - alpha*||_inf falls to the target (the residual test
  // is bypassed); without one, the target additionally gates termination on
  // the per-iteration dual step ||alpha_l - alpha_{l-1}||_inf / omega.
  std::optional<double> dual_precision_target{};
  std::optional<Vector> dual_reference{};  // gauge-fixed alpha*

  // With a dual reference: give up (status MaxIterations) when the distance
  // has not reached a new minimum for this many iterations. The distance
  // plateaus at the reference's own error, so a measurement run should not
  // spin once it gets there. 0 disables.
  std::size_t dual_stall_window = 0;

  // With a dual reference: periodically extrapolate the contraction observed
  // over the recent window and give up early once the target is provably out
  // of reach within max_iter. Slow geometric decays otherwise burn the whole
  // budget before reporting failure.
  bool dual_predictive_abort = false;

  // Telemetry: per-iteration KL(reference, iterate).
  std::optional<Matrix> reference_plan{};
};

// Quantities measured on the iterate each half-step acts on: row_error before
// the row update, col_error after it (before the column update), dual values
// at the top of the iteration.
struct IterationRecord {
  double row_error = 0.0;
  double col_error = 0.0;
  double omega_row = 1.0;
  double omega_col = 1.0;
  double lyapunov_decrease_row = 0.0;
  double lyapunov_decrease_col = 0.0;
  double dual_objective = std::numeric_limits<double>::quiet_NaN();
  double kl_to_reference = std::numeric_limits<double>::quiet_NaN();
  double dual_distance = std::numeric_limits<double>::quiet_NaN();
};

struct SolveReport {
  ScalingState final_state;
  std::size_t iterations = 0;
  bool converged = false;
  TerminationStatus status = TerminationStatus::MaxIterations;
  double final_row_error = std::numeric_limits<double>::quiet_NaN();
  double final_col_error = std::numeric_limits<double>::quiet_NaN();
  std::size_t kernel_applications = 0;
  std::vector<IterationRecord> trace;
  std::vector<ScalingState> state_history;  // initial state, then one per iteration
};

// L-inf norm of A1(gamma) - mu1 for the implied plan.
inline double stopping_error(const ScalingState& st, const TransportProblem& p) {
  const Vector ratio = log_marginal_ratio(st, p, Axis::Rows);
  double err = 0.0;
  for (std::size_t i = 0; i < ratio.size(); ++i)
    err = std::max(err, std::abs(p.mu1()[i] * std::expm1(ratio[i])));
  return err;
}

namespace detail {

inline double residual_from_log_ratio(const Vector& log_ratio, const Vector& mu) {
  double err = 0.0;
  for (std::size_t k = 0; k < log_ratio.size(); ++k) {
    const double e = std::abs(mu[k] * std::expm1(log_ratio[k]));
    if (std::isnan(e)) return e;
    err = std::max(err, e);
  }
  return err;
}

inline double lyapunov_decrease_from_log_ratio(const Vector& log_ratio, const Vector& mu,
                                               double omega) {
  double acc = 0.0;
  for (std::size_t k = 0; k < log_ratio.size(); ++k) {
    const double r = std::max(std::exp(log_ratio[k]), std::numeric_limits<double>::min());
    acc += mu[k] * phi(omega, r);
  }
  return acc;
}

inline double gauge_fixed_alpha_distance(const Vector& log_a, const Vector& alpha_ref,
                                         double eps) {
  const double k = log_a[0];
  double d = 0.0;
  for (std::size_t i = 0; i < log_a.size(); ++i)
    d = std::max(d, std::abs(eps * (log_a[i] - k) - alpha_ref[i]));
  return d;
}

}  // namespace detail

// Shared driver. One iteration is a row half-step followed by a column
// half-step, each an omega-overrelaxed projection; the stopping test runs at
// the top of the iteration on residuals already computed, so it costs no
// extra kernel application. A converged report satisfies both the row and the
// column residual at tol, the column side being verified with a direct
// reduction before exiting.
inline SolveReport solve(const TransportProblem& p, const SolveConfig& cfg) {
  if (!(cfg.tol > 0.0)) throw std::invalid_argument("solve: tol must be positive");
  if (cfg.max_iter == 0) throw std::invalid_argument("solve: max_iter must be positive");
  if (cfg.method == Method::FixedOmega && !(cfg.omega > 0.0 && cfg.omega < 2.0))
    throw std::invalid_argument("solve: fixed omega must lie in (0, 2)");
  if (cfg.method == Method::Adaptive) cfg.relaxation.validate();
  if (cfg.dual_reference && cfg.dual_reference->size() != p.n1())
    throw std::invalid_argument("solve: dual reference size does not match n1");
  if (cfg.dual_precision_target && !(*cfg.dual_precision_target > 0.0))
    throw std::invalid_argument("solve: dual precision target must be positive");

  const std::size_t n1 = p.n1(), n2 = p.n2();
  const double eps = p.epsilon();
  const Matrix lk = p.log_kernel();
  Vector log_mu1(n1), log_mu2(n2);
  for (std::size_t i = 0; i < n1; ++i) log_mu1[i] = std::log(p.mu1()[i]);
  for (std::size_t j = 0; j < n2; ++j) log_mu2[j] = std::log(p.mu2()[j]);

  ScalingState st = ScalingState::initial(p);
  SolveReport rep;
  if (cfg.record_state_history) rep.state_history.push_back(st);

  Vector rho(n1), sigma(n2);

  auto row_ratio = [&] {
    detail::log_row_sums(lk, st.log_b, rho);
    for (std::size_t i = 0; i < n1; ++i) rho[i] += st.log_a[i] - log_mu1[i];
    ++rep.kernel_applications;
  };
  auto col_ratio = [&] {
    detail::log_col_sums(lk, st.log_a, sigma);
    for (std::size_t j = 0; j < n2; ++j) sigma[j] += st.log_b[j] - log_mu2[j];
    ++rep.kernel_applications;
  };
  auto choose_omega = [&](const Vector& log_ratio) -> double {
    switch (cfg.method) {
      case Method::Sinkhorn:
        return 1.0;
      case Method::FixedOmega:
        return cfg.omega;
      case Method::Adaptive: {
        const double m =
            std::max(std::exp(min_element(log_ratio)), std::numeric_limits<double>::min());
        return theta_safe(m, cfg.relaxation);
      }
    }
    return 1.0;
  };

  const bool dual_gate = cfg.dual_reference.has_value() && cfg.dual_precision_target.has_value();
  double best_dual_dist = std::numeric_limits<double>::infinity();
  std::size_t best_dual_iter = 0;
  constexpr std::size_t predict_every = 256;
  double window_dist = std::numeric_limits<double>::quiet_NaN();
  double initial_row_err = -1.0;
  double tracked_col_err = std::numeric_limits<double>::quiet_NaN();  // unknown before a col pass
  double last_dual_step = std::numeric_limits<double>::infinity();
  TerminationStatus status = TerminationStatus::MaxIterations;
  double final_row_err = std::numeric_limits<double>::quiet_NaN();
  double final_col_err = std::numeric_limits<double>::quiet_NaN();
  std::size_t ell = 0;

  for (; ell < cfg.max_iter; ++ell) {
    row_ratio();
    const double row_err = detail::residual_from_log_ratio(rho, p.mu1());
    double dual_dist = std::numeric_limits<double>::quiet_NaN();
    if (cfg.dual_reference)
      dual_dist = detail::gauge_fixed_alpha_distance(st.log_a, *cfg.dual_reference, eps);

    if (!std::isfinite(row_err)) {
      status = TerminationStatus::Diverged;
      final_row_err = row_err;
      final_col_err = tracked_col_err;
      break;
    }
    if (initial_row_err < 0.0) initial_row_err = row_err;
    if (cfg.method == Method::FixedOmega &&
        row_err > 1e6 * std::max(initial_row_err, cfg.tol)) {
      status = TerminationStatus::Diverged;
      final_row_err = row_err;
      final_col_err = tracked_col_err;
      break;
    }

    if (dual_gate) {
      if (dual_dist <= *cfg.dual_precision_target) {
        status = TerminationStatus::Converged;
        final_row_err = row_err;
        final_col_err = tracked_col_err;
        break;
      }
      if (dual_dist < best_dual_dist) {
        best_dual_dist = dual_dist;
        best_dual_iter = ell;
      } else if (cfg.dual_stall_window > 0 && ell - best_dual_iter >= cfg.dual_stall_window) {
        final_row_err = row_err;
        final_col_err = tracked_col_err;
        break;  // status stays MaxIterations: target unreachable from here
      }
      if (cfg.dual_predictive_abort && ell % predict_every == 0) {
        if (ell >= 2 * predict_every && dual_dist > 0.0 && window_dist > 0.0) {
          // contraction over the last window; the asymptotic rate only gets
          // slower, so the extrapolated need is a lower bound
          const double shrink = std::log(window_dist / dual_dist);
          if (shrink > 0.0) {
            const double needed = static_cast<double>(predict_every) *
                                  std::log(dual_dist / *cfg.dual_precision_target) / shrink;
            if (needed > 1.05 * static_cast<double>(cfg.max_iter - ell)) {
              final_row_err = row_err;
              final_col_err = tracked_col_err;
              break;  // status stays MaxIterations
            }
          }
        }
        window_dist = dual_dist;
      }
    } else {
      bool candidate = row_err <= cfg.tol;
      if (candidate && cfg.dual_precision_target)
        candidate = last_dual_step <= *cfg.dual_precision_target;
      if (candidate && !(tracked_col_err > cfg.tol)) {
        col_ratio();  // verify the column residual directly before exiting
        const double col_err = detail::residual_from_log_ratio(sigma, p.mu2());
        tracked_col_err = col_err;
        if (col_err <= cfg.tol) {
          status = TerminationStatus::Converged;
          final_row_err = row_err;
          final_col_err = col_err;
          break;
        }
      }
    }

    // Row half-step.
    const double w1 = choose_omega(rho);
    IterationRecord rec;
    if (cfg.record_telemetry) {
      rec.row_error = row_err;
      rec.omega_row = w1;
      rec.lyapunov_decrease_row = detail::lyapunov_decrease_from_log_ratio(rho, p.mu1(), w1);
      rec.dual_distance = dual_dist;
    }
    for (std::size_t i = 0; i < n1; ++i) st.log_a[i] -= w1 * rho[i];
    last_dual_step = eps * max_abs(rho);

    // Column half-step.
    col_ratio();
    const double col_err = detail::residual_from_log_ratio(sigma, p.mu2());
    if (!std::isfinite(col_err)) {
      status = TerminationStatus::Diverged;
      final_row_err = row_err;
      final_col_err = col_err;
      break;
    }
    const double w2 = choose_omega(sigma);
    if (cfg.record_telemetry) {
      rec.col_error = col_err;
      rec.omega_col = w2;
      rec.lyapunov_decrease_col = detail::lyapunov_decrease_from_log_ratio(sigma, p.mu2(), w2);
    }
    for (std::size_t j = 0; j < n2; ++j) st.log_b[j] -= w2 * sigma[j];
    // Scaling a column rescales its own marginal exactly, so the post-update
    // column log-ratio is (1 - w2) * sigma without another reduction.
    {
      double e = 0.0;
      for (std::size_t j = 0; j < n2; ++j)
        e = std::max(e, std::abs(p.mu2()[j] * std::expm1((1.0 - w2) * sigma[j])));
      tracked_col_err = e;
    }

    if (cfg.record_telemetry) {
      if (cfg.record_dual_objective) rec.dual_objective = dual_objective(p, st);
      if (cfg.reference_plan)
        rec.kl_to_reference = kl_divergence(*cfg.reference_plan, plan_from_state(p, st).entries);
      rep.trace.push_back(rec);
    }
    if (cfg.record_state_history) rep.state_history.push_back(st);
  }

  if (status == TerminationStatus::MaxIterations) {
    // Loop exhausted: measure both residuals of the final state.
    row_ratio();
    final_row_err = detail::residual_from_log_ratio(rho, p.mu1());
    col_ratio();
    final_col_err = detail::residual_from_log_ratio(sigma, p.mu2());
  }

  rep.final_state = std::move(st);
  rep.iterations = ell;
  rep.status = status;
  rep.converged = status == TerminationStatus::Converged;
  rep.final_row_error = final_row_err;
  rep.final_col_error = final_col_err;
  return rep;
}

inline SolveReport solve_sinkhorn(const TransportProblem& p, SolveConfig cfg = {}) {
  cfg.method = Method::Sinkhorn;
  return solve(p, cfg);
}

inline SolveReport solve_fixed_omega(const TransportProblem& p, SolveConfig cfg) {
  cfg.method = Method::FixedOmega;
  return solve(p, cfg);
}

inline SolveReport solve_adaptive(const TransportProblem& p, SolveConfig cfg) {
  cfg.method = Method::Adaptive;
  return solve(p, cfg);
}

// High-precision solve used for oracles, spectral analysis and rate
// measurements: safeguarded adaptive iteration with a tight feasibility
// tolerance. Throws if the tolerance is not reached.
inline SolveReport reference_solve(const TransportProblem& p, double tol = 1e-12,
                                   std::size_t max_iter = 4000000, double theta0 = 1.95) {
  SolveConfig cfg;
  cfg.method = Method::Adaptive;
  cfg.relaxation.theta0 = theta0;
  cfg.tol = tol;
  cfg.max_iter = max_iter;
  SolveReport rep = solve(p, cfg);
  if (!rep.converged)
    throw std::runtime_error("reference_solve: failed to reach the requested tolerance");
  return rep;
}

// Per-iteration gauge-fixed dual distances from a telemetry trace.
inline Vector dual_distance_trace(const SolveReport& rep) {
  Vector d;
  d.reserve(rep.trace.size());
  for (const auto& rec : rep.trace) d.push_back(rec.dual_distance);
  return d;
}

}  // namespace oro
