// Core operations: Gibbs kernel, marginal operators, primal and dual
// objectives, and the log-domain scaling state every solver works on.
//
// All inner arithmetic runs on (log_a, log_b). Row and column reductions of
// the implied plan exp(log_a_i - c_ij/eps + log_b_j) are computed with
// max-shifted exponential sums, so small regularization never underflows.
// The plain-domain plan is a convenience view.
#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "oro/matrix.hpp"
#include "oro/problem.hpp"

namespace oro {

// Diagonal scaling vectors in the natural-log domain. The dual potentials are
// alpha = eps * log_a and beta = eps * log_b.
struct ScalingState {
  Vector log_a;
  Vector log_b;

  static ScalingState initial(const TransportProblem& p) {
    return {Vector(p.n1(), 0.0), Vector(p.n2(), 0.0)};
  }
};

namespace detail {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// Shifted arguments below this produce subnormal or zero exponentials, which
// cost an order of magnitude more than the normal exp path on common libms
// and cannot affect a max-shifted sum whose largest term is exp(0) = 1.
// Skipping them keeps small-epsilon kernels (entries spanning hundreds of
// log units) at full speed.
constexpr double exp_cutoff = -700.0;

inline double exp_shifted(double x) { return x < exp_cutoff ? 0.0 : std::exp(x); }

// out[i] = log sum_j exp(lk(i,j) + add[j])
inline void log_row_sums(const Matrix& lk, const Vector& add, Vector& out) {
  const std::size_t n1 = lk.rows(), n2 = lk.cols();
  out.resize(n1);
  for (std::size_t i = 0; i < n1; ++i) {
    const double* r = lk.data() + i * n2;
    double m = neg_inf;
    for (std::size_t j = 0; j < n2; ++j) m = std::max(m, r[j] + add[j]);
    if (!std::isfinite(m)) {
      out[i] = m;
      continue;
    }
    double s = 0.0;
    for (std::size_t j = 0; j < n2; ++j) s += exp_shifted(r[j] + add[j] - m);
    out[i] = m + std::log(s);
  }
}

// out[j] = log sum_i exp(lk(i,j) + add[i]); two row-major passes so the
// column reduction stays cache friendly.
inline void log_col_sums(const Matrix& lk, const Vector& add, Vector& out) {
  const std::size_t n1 = lk.rows(), n2 = lk.cols();
  out.assign(n2, neg_inf);
  for (std::size_t i = 0; i < n1; ++i) {
    const double* r = lk.data() + i * n2;
    const double ai = add[i];
    for (std::size_t j = 0; j < n2; ++j) out[j] = std::max(out[j], r[j] + ai);
  }
  Vector acc(n2, 0.0);
  for (std::size_t i = 0; i < n1; ++i) {
    const double* r = lk.data() + i * n2;
    const double ai = add[i];
    for (std::size_t j = 0; j < n2; ++j) acc[j] += exp_shifted(r[j] + ai - out[j]);
  }
  for (std::size_t j = 0; j < n2; ++j)
    out[j] = std::isfinite(out[j]) ? out[j] + std::log(acc[j]) : out[j];
}

}  // namespace detail

// The Gibbs kernel exp(-c/eps) in the plain domain. Rejects regimes where an
// entry underflows to exactly zero; use TransportProblem::log_kernel there.
inline TransportPlan gibbs_kernel(const TransportProblem& p) {
  TransportPlan plan{Matrix(p.n1(), p.n2())};
  for (std::size_t i = 0; i < p.n1(); ++i)
    for (std::size_t j = 0; j < p.n2(); ++j) {
      const double v = std::exp(-p.cost()(i, j) / p.epsilon());
      if (v == 0.0)
        throw std::runtime_error(
            "gibbs_kernel: entry underflows to zero in the plain domain; "
            "use the stabilized log-domain representation (log_kernel)");
      plan.entries(i, j) = v;
    }
  return plan;
}

inline Vector marginal_rows(const Matrix& plan) {
  Vector out(plan.rows());
  for (std::size_t i = 0; i < plan.rows(); ++i) out[i] = sum(plan.row(i));
  return out;
}

inline Vector marginal_cols(const Matrix& plan) {
  Vector out(plan.cols(), 0.0);
  for (std::size_t i = 0; i < plan.rows(); ++i) {
    const auto r = plan.row(i);
    for (std::size_t j = 0; j < plan.cols(); ++j) out[j] += r[j];
  }
  return out;
}

inline Vector marginal_rows(const TransportPlan& plan) { return marginal_rows(plan.entries); }
inline Vector marginal_cols(const TransportPlan& plan) { return marginal_cols(plan.entries); }

// KL(gamma, xi) = sum gamma (log(gamma/xi) - 1) + sum xi, with 0 log 0 = 0.
inline double kl_divergence(const Matrix& gamma, const Matrix& xi) {
  if (gamma.rows() != xi.rows() || gamma.cols() != xi.cols())
    throw std::invalid_argument("kl_divergence: dimension mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < gamma.size(); ++k) {
    const double g = gamma.data()[k];
    const double x = xi.data()[k];
    acc += (g > 0.0 ? g * (std::log(g / x) - 1.0) : 0.0) + x;
  }
  return acc;
}

// <c, gamma> + eps * KL(gamma, 1)
inline double primal_objective(const TransportProblem& p, const TransportPlan& plan) {
  if (plan.entries.rows() != p.n1() || plan.entries.cols() != p.n2())
    throw std::invalid_argument("primal_objective: plan dimensions do not match the problem");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.n1(); ++i)
    for (std::size_t j = 0; j < p.n2(); ++j) {
      const double g = plan.entries(i, j);
      acc += p.cost()(i, j) * g + p.epsilon() * ((g > 0.0 ? g * (std::log(g) - 1.0) : 0.0) + 1.0);
    }
  return acc;
}

// E(alpha, beta) = <alpha,mu1> + <beta,mu2> - eps * sum exp((alpha_i+beta_j-c_ij)/eps),
// evaluated as eps * (<log_a,mu1> + <log_b,mu2> - sum exp(L_ij)) with a global
// max shift on the log-plan entries L.
inline double dual_objective(const TransportProblem& p, const ScalingState& st) {
  const double eps = p.epsilon();
  const double lin = dot(st.log_a, p.mu1()) + dot(st.log_b, p.mu2());
  double m = detail::neg_inf;
  for (std::size_t i = 0; i < p.n1(); ++i)
    for (std::size_t j = 0; j < p.n2(); ++j)
      m = std::max(m, st.log_a[i] - p.cost()(i, j) / eps + st.log_b[j]);
  double s = 0.0;
  for (std::size_t i = 0; i < p.n1(); ++i)
    for (std::size_t j = 0; j < p.n2(); ++j)
      s += std::exp(st.log_a[i] - p.cost()(i, j) / eps + st.log_b[j] - m);
  const double total = std::isfinite(m) ? std::exp(m) * s : 0.0;
  return eps * (lin - total);
}

// gamma_ij = exp(log_a_i - c_ij/eps + log_b_j), never forming exp(-c/eps) on
// its own. Entries may overflow to infinity for a diverged state.
inline TransportPlan plan_from_state(const TransportProblem& p, const ScalingState& st) {
  TransportPlan plan{Matrix(p.n1(), p.n2())};
  for (std::size_t i = 0; i < p.n1(); ++i)
    for (std::size_t j = 0; j < p.n2(); ++j)
      plan.entries(i, j) = std::exp(st.log_a[i] - p.cost()(i, j) / p.epsilon() + st.log_b[j]);
  return plan;
}

// Dual potentials (alpha, beta) = eps * (log_a, log_b).
inline std::pair<Vector, Vector> dual_potentials(const TransportProblem& p, const ScalingState& st) {
  Vector alpha(st.log_a.size()), beta(st.log_b.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) alpha[i] = p.epsilon() * st.log_a[i];
  for (std::size_t j = 0; j < beta.size(); ++j) beta[j] = p.epsilon() * st.log_b[j];
  return {std::move(alpha), std::move(beta)};
}

// Resolves the translation invariance (alpha, beta) -> (alpha - k, beta + k)
// by pinning log_a[0] = 0. The implied plan is unchanged. Applied only when
// reporting or comparing dual variables, never inside iterations.
inline ScalingState gauge_fixed(ScalingState st) {
  if (st.log_a.empty()) return st;
  const double k = st.log_a[0];
  for (double& v : st.log_a) v -= k;
  for (double& v : st.log_b) v += k;
  return st;
}

// Gauge-fixed alpha = eps * (log_a - log_a[0]), the representation used for
// dual-variable convergence measurements.
inline Vector gauge_fixed_alpha(const TransportProblem& p, const ScalingState& st) {
  Vector alpha(st.log_a.size());
  const double k = st.log_a.empty() ? 0.0 : st.log_a[0];
  for (std::size_t i = 0; i < alpha.size(); ++i) alpha[i] = p.epsilon() * (st.log_a[i] - k);
  return alpha;
}

}  // namespace oro
