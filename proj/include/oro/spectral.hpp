// Local convergence-rate analysis: the matrix M1 whose second eigenvalue
// governs the Sinkhorn rate, its spectral gap via deflated power iteration on
// an exactly symmetric similar matrix, the SOR rate function, and empirical
// rate measurement from solve traces.
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "oro/core.hpp"
#include "oro/rng.hpp"
#include "oro/solver.hpp"

namespace oro {

// Spectral gap eta, the predicted Sinkhorn rate 1 - eta, the optimal
// overrelaxation parameter 2/(1+sqrt(eta)) and its rate.
struct SpectralReport {
  double eta = 1.0;
  double sk_rate = 0.0;
  double theta_opt = 1.0;
  double or_rate = 0.0;
};

// M1 = diag(1/mu1) gamma diag(1/mu2) gamma^T for a feasible reference plan.
// Row-stochastic when the plan is feasible; largest eigenvalue 1 with
// eigenvector of all ones.
inline Matrix build_m1(const TransportPlan& reference_plan, const TransportProblem& p) {
  const Matrix& g = reference_plan.entries;
  if (g.rows() != p.n1() || g.cols() != p.n2())
    throw std::invalid_argument("build_m1: plan dimensions do not match the problem");
  const Vector rows = marginal_rows(g);
  const Vector cols = marginal_cols(g);
  double err = 0.0;
  for (std::size_t i = 0; i < p.n1(); ++i) err = std::max(err, std::abs(rows[i] - p.mu1()[i]));
  for (std::size_t j = 0; j < p.n2(); ++j) err = std::max(err, std::abs(cols[j] - p.mu2()[j]));
  if (!(err <= 1e-8))
    throw std::invalid_argument("build_m1: reference plan is infeasible (marginal error " +
                                std::to_string(err) + ")");
  const std::size_t n1 = p.n1(), n2 = p.n2();
  Matrix m1(n1, n1);
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t k = 0; k < n1; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < n2; ++j) s += g(i, j) * g(k, j) / p.mu2()[j];
      m1(i, k) = s / p.mu1()[i];
    }
  return m1;
}

struct PowerIterationOptions {
  double tol = 1e-12;  // on the Rayleigh quotient
  int max_iter = 10000;
};

// eta = 1 - lambda_2 of M1. The computation runs on the exactly symmetric
// similar matrix S = D^{1/2} M1 D^{-1/2} with D = diag(mu1), whose known top
// eigenvector sqrt(mu1) is deflated before power iteration; the spectrum of S
// lies in [0, 1].
inline double spectral_gap(const Matrix& m1, const Vector& mu1,
                           PowerIterationOptions opts = {}) {
  const std::size_t n = m1.rows();
  if (m1.cols() != n) throw std::invalid_argument("spectral_gap: M1 must be square");
  if (mu1.size() != n) throw std::invalid_argument("spectral_gap: mu1 size does not match M1");
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += m1(i, k);
    if (!(std::abs(s - 1.0) <= 1e-8))
      throw std::invalid_argument("spectral_gap: M1 is not row-stochastic");
  }
  if (n == 1) return 1.0;

  Matrix s_mat(n, n);
  Vector sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = std::sqrt(mu1[i]);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) s_mat(i, k) = sq[i] * m1(i, k) / sq[k];

  // Top eigenvector of S, normalized.
  Vector u = sq;
  {
    const double nu = std::sqrt(dot(u, u));
    for (double& x : u) x /= nu;
  }

  // Deterministic start, orthogonal to u.
  Vector v(n);
  Xoshiro256PlusPlus rng(0x5EEDULL);
  for (double& x : v) x = rng.uniform() - 0.5;
  {
    const double proj = dot(v, u);
    for (std::size_t i = 0; i < n; ++i) v[i] -= proj * u[i];
    const double nv = std::sqrt(dot(v, v));
    if (!(nv > 0.0)) throw std::runtime_error("spectral_gap: degenerate start vector");
    for (double& x : v) x /= nv;
  }

  Vector w(n);
  double lambda = 0.0;
  bool converged = false;
  for (int it = 0; it < opts.max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += s_mat(i, k) * v[k];
      w[i] = s;
    }
    const double proj = dot(w, u);
    for (std::size_t i = 0; i < n; ++i) w[i] -= proj * u[i];
    const double rq = dot(v, w);  // v is unit length
    const double nw = std::sqrt(dot(w, w));
    if (nw < 1e-300) {
      lambda = 0.0;  // rank-one after deflation
      converged = true;
      break;
    }
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nw;
    if (it > 0 && std::abs(rq - lambda) <= opts.tol * std::max(1.0, std::abs(rq))) {
      lambda = rq;
      converged = true;
      break;
    }
    lambda = rq;
  }
  if (!converged)
    throw std::runtime_error("spectral_gap: power iteration did not converge");
  lambda = std::clamp(lambda, 0.0, 1.0);
  return 1.0 - lambda;
}

// theta* = 2 / (1 + sqrt(eta))
inline double optimal_theta(double eta) {
  if (!(eta > 0.0) || !(eta <= 1.0)) throw std::domain_error("optimal_theta: eta must lie in (0, 1]");
  return 2.0 / (1.0 + std::sqrt(eta));
}

// Asymptotic contraction factor of the fixed-theta overrelaxed iteration:
// theta - 1 beyond theta*, the quadratic branch
//   (1/2) theta^2 (1-eta) - (theta-1) + (1/2) sqrt((1-eta) theta^2 D)
// below it. The inner factor D = theta^2 (1-eta) - 4 (theta-1) vanishes at
// theta* and cancels catastrophically when expanded, so it is evaluated in
// the equivalent root-factored form D = (theta - theta*)((1-eta) theta -
// 2 (1+sqrt(eta))), which is exact at the breakpoint.
inline double sor_rate(double theta, double eta) {
  if (!(theta > 0.0) || !(theta < 2.0)) throw std::domain_error("sor_rate: theta must lie in (0, 2)");
  if (!(eta > 0.0) || !(eta <= 1.0)) throw std::domain_error("sor_rate: eta must lie in (0, 1]");
  const double tstar = optimal_theta(eta);
  if (theta > tstar) return theta - 1.0;
  const double inner = (theta - tstar) * ((1.0 - eta) * theta - 2.0 * (1.0 + std::sqrt(eta)));
  const double disc = std::max((1.0 - eta) * theta * theta * inner, 0.0);
  return 0.5 * theta * theta * (1.0 - eta) - (theta - 1.0) + 0.5 * std::sqrt(disc);
}

inline SpectralReport make_spectral_report(double eta) {
  SpectralReport r;
  r.eta = eta;
  r.sk_rate = 1.0 - eta;
  r.theta_opt = optimal_theta(eta);
  const double s = std::sqrt(eta);
  r.or_rate = (1.0 - s) / (1.0 + s);
  return r;
}

// Full pipeline for a problem: high-precision reference solve, M1, gap. Small
// regularization clusters the trailing eigenvalues, so this entry point gives
// the power iteration a larger budget than the bare default.
inline SpectralReport compute_spectral_report(const TransportProblem& p,
                                              double reference_tol = 1e-12) {
  const SolveReport ref = reference_solve(p, reference_tol);
  const TransportPlan plan = plan_from_state(p, ref.final_state);
  const Matrix m1 = build_m1(plan, p);
  return make_spectral_report(spectral_gap(m1, p.mu1(), {1e-12, 200000}));
}

struct RateFitOptions {
  double floor = 1e-10;            // fit stops at the first distance below this
  double window_fraction = 0.3;    // tail share of the pre-floor iterations
  std::size_t min_tail_points = 20;
};

// Per-iteration contraction factor from a distance trace: least-squares slope
// of log distance over the tail window, exponentiated.
inline double empirical_rate(const Vector& distances, RateFitOptions opts = {}) {
  std::size_t t_end = distances.size();
  for (std::size_t l = 0; l < distances.size(); ++l) {
    if (distances[l] <= opts.floor) {
      t_end = l + 1;
      break;
    }
  }
  if (t_end == 0) throw std::runtime_error("empirical_rate: empty trace");
  const std::size_t span = t_end - 1;
  const std::size_t start = span - static_cast<std::size_t>(std::floor(opts.window_fraction * span));
  std::vector<std::pair<double, double>> pts;
  for (std::size_t l = start; l < t_end; ++l) {
    const double d = distances[l];
    if (d > 0.0 && std::isfinite(d)) pts.emplace_back(static_cast<double>(l), std::log(d));
  }
  if (pts.size() < opts.min_tail_points)
    throw std::runtime_error("empirical_rate: trace too short for a tail fit (" +
                             std::to_string(pts.size()) + " points)");
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [x, y] : pts) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
  }
  if (!(sxx > 0.0)) throw std::runtime_error("empirical_rate: degenerate tail window");
  return std::exp(sxy / sxx);
}

// Convenience overload on a trace of gauge-fixed dual iterates.
inline double empirical_rate(const std::vector<Vector>& alpha_trace, const Vector& alpha_ref,
                             RateFitOptions opts = {}) {
  Vector d(alpha_trace.size());
  for (std::size_t l = 0; l < alpha_trace.size(); ++l) {
    if (alpha_trace[l].size() != alpha_ref.size())
      throw std::invalid_argument("empirical_rate: iterate size does not match the reference");
    double m = 0.0;
    for (std::size_t i = 0; i < alpha_ref.size(); ++i)
      m = std::max(m, std::abs(alpha_trace[l][i] - alpha_ref[i]));
    d[l] = m;
  }
  return empirical_rate(d, opts);
}

}  // namespace oro
