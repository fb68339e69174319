// Acceptance suite: one check per release criterion, each printed as a
// pass/fail line with the measured quantity. Exits nonzero if any fails.
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oro/oro.hpp"

using namespace oro;

namespace {

struct Outcome {
  bool passed = true;
  std::string detail;
};

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const auto start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

double max_cost(const TransportProblem& p) {
  double m = 0.0;
  for (std::size_t k = 0; k < p.cost().size(); ++k) m = std::max(m, p.cost().data()[k]);
  return m;
}

double max_abs_diff(const Vector& a, const Vector& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

double rel_diff(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

TransportProblem random_square_problem(std::size_t n, std::uint64_t seed, double epsilon) {
  return gen_setting_b(n, seed, epsilon);
}

// --- criterion 1: adaptive with theta0 = 1 reproduces Sinkhorn ------------

Outcome criterion_sk_equivalence() {
  const double t0 = now_seconds();
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    TransportProblem probe = random_square_problem(20, seed, 1.0);
    const double eps = 0.1 * max_cost(probe);
    TransportProblem p = random_square_problem(20, seed, eps);

    SolveConfig cfg;
    cfg.tol = 1e-9;
    cfg.record_state_history = true;
    const SolveReport sk = solve_sinkhorn(p, cfg);
    SolveConfig ca = cfg;
    ca.relaxation.theta0 = 1.0;
    const SolveReport ad = solve_adaptive(p, ca);

    if (!sk.converged || !ad.converged) return {false, "a solve failed to converge"};
    if (sk.iterations != ad.iterations)
      return {false, fmt("iteration counts differ (%zu vs %zu)", sk.iterations, ad.iterations)};
    for (std::size_t l = 0; l < sk.state_history.size(); ++l) {
      worst = std::max(worst, max_abs_diff(sk.state_history[l].log_a, ad.state_history[l].log_a));
      worst = std::max(worst, max_abs_diff(sk.state_history[l].log_b, ad.state_history[l].log_b));
    }
  }
  const double elapsed = now_seconds() - t0;
  const bool ok = worst <= 1e-12 && elapsed < 5.0;
  return {ok, fmt("max log-scaling deviation %.2e (tol 1e-12), %.2f s (limit 5 s)", worst, elapsed)};
}

// --- criterion 2: converged solves are feasible at tol --------------------

Outcome criterion_feasibility() {
  const double tol = 1e-9;
  double worst = 0.0;
  std::size_t solves = 0;
  std::vector<TransportProblem> problems;
  problems.push_back(random_square_problem(15, 21, 0.3));
  problems.push_back(random_square_problem(15, 22, 0.05));
  problems.push_back(gen_setting_b(30, 23, 0.01));
  {
    const double mc = nominal_max_cost(SettingKind::QuadraticPlateaus, 40);
    problems.push_back(gen_setting_a(40, 24, 1e-3 * mc));  // deep log-domain regime
  }
  for (const TransportProblem& p : problems) {
    for (int m = 0; m < 3; ++m) {
      SolveConfig cfg;
      cfg.tol = tol;
      cfg.max_iter = 500000;
      cfg.method = m == 0 ? Method::Sinkhorn : (m == 1 ? Method::FixedOmega : Method::Adaptive);
      cfg.omega = 1.5;
      cfg.relaxation.theta0 = 1.8;
      const SolveReport rep = solve(p, cfg);
      if (!rep.converged) return {false, "a solve failed to converge"};
      const TransportPlan plan = plan_from_state(p, rep.final_state);
      worst = std::max(worst, max_abs_diff(marginal_rows(plan), p.mu1()));
      worst = std::max(worst, max_abs_diff(marginal_cols(plan), p.mu2()));
      ++solves;
    }
  }
  return {worst <= tol, fmt("%zu converged solves, worst marginal residual %.2e (tol %.0e)",
                            solves, worst, tol)};
}

// --- criterion 3: Lyapunov monotonicity along the adaptive iteration ------

Outcome criterion_lyapunov_monotonicity() {
  double worst_increase = 0.0;
  double worst_halfstep = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TransportProblem probe = random_square_problem(30, 100 + seed, 1.0);
    TransportProblem p = random_square_problem(30, 100 + seed, 0.05 * max_cost(probe));
    const SolveReport ref = reference_solve(p, 1e-12);
    SolveConfig cfg;
    cfg.method = Method::Adaptive;
    cfg.relaxation.theta0 = 1.9;
    cfg.tol = 1e-10;
    cfg.record_telemetry = true;
    cfg.reference_plan = plan_from_state(p, ref.final_state).entries;
    const SolveReport rep = solve(p, cfg);
    if (!rep.converged) return {false, "adaptive solve failed to converge"};
    for (std::size_t l = 1; l < rep.trace.size(); ++l)
      worst_increase = std::max(
          worst_increase, rep.trace[l].kl_to_reference - rep.trace[l - 1].kl_to_reference);
    for (const auto& rec : rep.trace) {
      worst_halfstep = std::min(worst_halfstep, rec.lyapunov_decrease_row);
      worst_halfstep = std::min(worst_halfstep, rec.lyapunov_decrease_col);
    }
  }
  const bool ok = worst_increase <= 1e-12 && worst_halfstep >= -1e-14;
  return {ok, fmt("worst KL increase %.2e (slack 1e-12), worst half-step decrease %.2e "
                  "(floor -1e-14)",
                  worst_increase, worst_halfstep)};
}

// --- criterion 4: computable decrease equals the direct KL difference -----

Outcome criterion_decrease_formula() {
  Xoshiro256PlusPlus rng(404);
  TransportProblem p = random_square_problem(6, 404, 0.4);
  const SolveReport ref = reference_solve(p, 1e-12);
  const Matrix star = plan_from_state(p, ref.final_state).entries;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    ScalingState st = ScalingState::initial(p);
    for (auto& v : st.log_a) v = rng.uniform() - 0.5;
    for (auto& v : st.log_b) v = rng.uniform() - 0.5;
    const double omega = 1.0 + 0.95 * rng.uniform();
    const Axis axis = trial % 2 == 0 ? Axis::Rows : Axis::Cols;

    const double lib = lyapunov_decrease(st, p, axis, omega);
    const Matrix before = plan_from_state(p, st).entries;
    const Matrix after = plan_from_state(p, overrelaxed_project(st, p, axis, omega)).entries;
    const double oracle = kl_divergence(star, before) - kl_divergence(star, after);
    worst = std::max(worst, rel_diff(lib, oracle));
  }
  return {worst <= 1e-8, fmt("100 draws, worst relative deviation %.2e (tol 1e-8)", worst)};
}

// --- criterion 5: monotonicity of F(P^theta) in theta ---------------------

Outcome criterion_theta_monotonicity() {
  Xoshiro256PlusPlus rng(505);
  TransportProblem p = random_square_problem(5, 505, 0.6);
  const SolveReport ref = reference_solve(p, 1e-13);
  const TransportPlan star = plan_from_state(p, ref.final_state);
  std::size_t violations = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 500; ++trial) {
    ScalingState st = ScalingState::initial(p);
    for (auto& v : st.log_a) v = rng.uniform() - 0.5;
    for (auto& v : st.log_b) v = rng.uniform() - 0.5;
    const double theta = 1.0 + 0.85 * rng.uniform();
    const double omega = theta + 0.05 + (1.95 - theta) * rng.uniform();
    const Axis axis = trial % 2 == 0 ? Axis::Rows : Axis::Cols;
    const double f_theta =
        lyapunov_reference(plan_from_state(p, overrelaxed_project(st, p, axis, theta)), star);
    const double f_omega =
        lyapunov_reference(plan_from_state(p, overrelaxed_project(st, p, axis, omega)), star);
    if (f_theta > f_omega + 1e-12) ++violations;
    min_margin = std::min(min_margin, f_omega - f_theta);
  }
  const bool ok = violations == 0 && min_margin > 0.0;
  return {ok, fmt("500 draws, %zu violations, smallest strict margin %.2e", violations,
                  min_margin)};
}

// --- criterion 6: local rates match the spectral prediction ---------------

Outcome criterion_local_rates() {
  const double t0 = now_seconds();
  double worst_sk = 0.0, worst_or = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TransportProblem probe = random_square_problem(30, split_seed(42, seed), 1.0);
    const double eps = 0.05 * max_cost(probe);
    TransportProblem p = random_square_problem(30, split_seed(42, seed), eps);

    const SolveReport ref = reference_solve(p, 1e-13);
    const Vector alpha_star = gauge_fixed_alpha(p, ref.final_state);
    const SpectralReport sr = compute_spectral_report(p, 1e-13);

    SolveConfig cfg;
    cfg.method = Method::Sinkhorn;
    cfg.record_telemetry = true;
    cfg.dual_reference = alpha_star;
    cfg.dual_precision_target = 1e-10;
    cfg.max_iter = 500000;
    const SolveReport sk = solve(p, cfg);
    if (!sk.converged) return {false, "sinkhorn run did not reach the measurement depth"};
    const double sk_fit = empirical_rate(dual_distance_trace(sk), {1e-10, 0.5, 20});
    worst_sk = std::max(worst_sk, rel_diff(sk_fit, sr.sk_rate));

    SolveConfig cf2 = cfg;
    cf2.method = Method::FixedOmega;
    cf2.omega = sr.theta_opt;
    cf2.dual_precision_target = 1e-12;
    const SolveReport fo = solve(p, cf2);
    const double or_fit = empirical_rate(dual_distance_trace(fo), {1e-12, 0.75, 10});
    worst_or = std::max(worst_or, rel_diff(or_fit, sr.or_rate));
  }
  const double elapsed = now_seconds() - t0;
  const bool ok = worst_sk <= 0.05 && worst_or <= 0.10 && elapsed < 60.0;
  return {ok, fmt("worst SK deviation %.2f%% (tol 5%%), worst OR deviation %.2f%% (tol 10%%), "
                  "%.1f s (limit 60 s)",
                  100.0 * worst_sk, 100.0 * worst_or, elapsed)};
}

// --- criterion 7: rate-function identities ---------------------------------

Outcome criterion_rate_identities() {
  double worst_id = 0.0, worst_cont = 0.0, worst_argmin = 0.0;
  for (int k = 1; k <= 50; ++k) {
    const double eta = static_cast<double>(k) / 51.0;
    const double sq = std::sqrt(eta);
    const double tstar = optimal_theta(eta);
    worst_id = std::max(worst_id, std::abs(sor_rate(1.0, eta) - (1.0 - eta)));
    worst_id = std::max(worst_id, std::abs(sor_rate(tstar, eta) - (1.0 - sq) / (1.0 + sq)));
    // left and right branch values at the breakpoint itself: the quadratic
    // branch evaluated at theta* against the linear branch theta* - 1
    worst_cont = std::max(worst_cont, std::abs(sor_rate(tstar, eta) - (tstar - 1.0)));
    double best_theta = 0.0, best_rate = std::numeric_limits<double>::infinity();
    for (double theta = 0.001; theta < 1.9995; theta += 0.001) {
      const double r = sor_rate(theta, eta);
      if (r < best_rate) {
        best_rate = r;
        best_theta = theta;
      }
    }
    worst_argmin = std::max(worst_argmin, std::abs(best_theta - tstar));
  }
  const bool ok = worst_id <= 1e-12 && worst_cont <= 1e-10 && worst_argmin <= 2e-3;
  return {ok, fmt("identities %.1e (tol 1e-12), continuity %.1e (tol 1e-10), argmin gap %.1e "
                  "(grid 1e-3)",
                  worst_id, worst_cont, worst_argmin)};
}

// --- criterion 8: speedup reproduction -------------------------------------

Outcome criterion_speedup() {
  const double t0 = now_seconds();
  ExperimentSetting s;
  s.kind = SettingKind::QuadraticPlateaus;
  s.n = 100;
  s.seed = 1;
  s.instances = 5;
  s.strategy = ThetaStrategy::Estimated;
  const double mc = nominal_max_cost(s.kind, s.n);
  s.epsilon_list = {1.0 * mc, 0.1 * mc, 0.01 * mc, 1e-3 * mc};
  const BenchResult r = run_speed_ratio(s);

  for (const auto& row : r.per_epsilon)
    if (!row.converged_sk || !row.converged_or)
      return {false, fmt("cells failed to converge at epsilon %.3e", row.epsilon)};
  const double ratio_smallest = r.per_epsilon.back().ratio;
  const double ratio_largest = r.per_epsilon.front().ratio;
  const double elapsed = now_seconds() - t0;
  const bool ok = ratio_smallest >= 10.0 && ratio_smallest > ratio_largest && elapsed < 600.0;
  return {ok, fmt("median ratio %.1f at the smallest epsilon (gate 10; above 20: %s), %.1f at "
                  "the largest, %.0f s (limit 600 s)",
                  ratio_smallest, ratio_smallest >= 20.0 ? "yes" : "no", ratio_largest, elapsed)};
}

// --- criterion 9: estimated strategy close to measured ---------------------

Outcome criterion_estimated_vs_measured() {
  ExperimentSetting s;
  s.kind = SettingKind::RandomCostUniform;
  s.n = 100;
  s.seed = 3;
  s.instances = 5;
  s.epsilon_list = {0.3, 0.1, 0.03, 0.01};

  ExperimentSetting est = s;
  est.strategy = ThetaStrategy::Estimated;
  const BenchResult re = run_speed_ratio(est);
  ExperimentSetting mea = s;
  mea.strategy = ThetaStrategy::Measured;
  const BenchResult rm = run_speed_ratio(mea);

  double worst_factor = 1.0;
  for (std::size_t e = 0; e < s.epsilon_list.size(); ++e) {
    const double a = re.per_epsilon[e].or_iterations;
    const double b = rm.per_epsilon[e].or_iterations;
    if (!(a > 0.0) || !(b > 0.0)) return {false, "missing iteration medians"};
    worst_factor = std::max(worst_factor, std::max(a / b, b / a));
  }
  return {worst_factor <= 2.0,
          fmt("worst estimated/measured median-iteration factor %.2f (gate 2.0)", worst_factor)};
}

// --- criterion 10: projection operator identities ---------------------------

Outcome criterion_projection_identities() {
  Xoshiro256PlusPlus rng(1010);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n1 = 2 + trial % 5, n2 = 2 + (trial / 3) % 4;
    Matrix plan(n1, n2);
    for (std::size_t k = 0; k < plan.size(); ++k)
      plan.data()[k] = std::exp(2.0 * rng.uniform() - 1.0);
    Vector mu1(n1), mu2(n2);
    double s1 = 0.0, s2 = 0.0;
    for (auto& m : mu1) s1 += (m = 0.2 + rng.uniform());
    for (auto& m : mu2) s2 += (m = 0.2 + rng.uniform());
    for (auto& m : mu1) m /= s1;
    for (auto& m : mu2) m /= s2;
    Matrix cost(n1, n2);
    for (std::size_t k = 0; k < cost.size(); ++k) cost.data()[k] = -std::log(plan.data()[k]);
    TransportProblem p(cost, mu1, mu2, 1.0);
    const ScalingState zero = ScalingState::initial(p);
    const Axis axis = trial % 2 == 0 ? Axis::Rows : Axis::Cols;

    const ScalingState id = overrelaxed_project(zero, p, axis, 0.0);
    worst = std::max(worst, std::max(max_abs(id.log_a), max_abs(id.log_b)));

    const ScalingState one = overrelaxed_project(zero, p, axis, 1.0);
    const ScalingState breg = bregman_project(zero, p, axis);
    worst = std::max(worst, max_abs_diff(one.log_a, breg.log_a));
    worst = std::max(worst, max_abs_diff(one.log_b, breg.log_b));

    const ScalingState twice =
        overrelaxed_project(overrelaxed_project(zero, p, axis, 2.0), p, axis, 2.0);
    worst = std::max(worst, std::max(max_abs(twice.log_a), max_abs(twice.log_b)));
  }
  return {worst <= 1e-12, fmt("100 plans, worst identity deviation %.2e (tol 1e-12)", worst)};
}

// --- criterion 11: adaptive safeguard ---------------------------------------

Outcome criterion_adaptive_safeguard() {
  Xoshiro256PlusPlus rng(1111);
  RelaxationConfig cfg;
  cfg.theta0 = 1.9;
  cfg.delta = 0.01;
  const double tol = 1e-9;
  std::size_t out_of_range = 0, nonpositive = 0, infeasible_draws = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    TransportProblem p = random_square_problem(3 + trial % 4, 2000 + trial, 0.2 + rng.uniform());
    ScalingState st = ScalingState::initial(p);
    for (auto& v : st.log_a) v = 2.0 * rng.uniform() - 1.0;
    for (auto& v : st.log_b) v = 2.0 * rng.uniform() - 1.0;
    const Vector ratio = log_marginal_ratio(st, p, Axis::Rows);
    const double target = 0.05 + 2.95 * rng.uniform();
    const double shift = std::log(target) - min_element(ratio);
    for (auto& v : st.log_a) v += shift;

    const double theta = theta_for_state(st, p, Axis::Rows, cfg);
    if (theta < 1.0 || theta > cfg.theta0) ++out_of_range;
    if (stopping_error(st, p) > tol) {
      ++infeasible_draws;
      if (!(lyapunov_decrease(st, p, Axis::Rows, theta) > 0.0)) ++nonpositive;
    }
  }
  const bool ok = out_of_range == 0 && nonpositive == 0 && infeasible_draws > 900;
  return {ok, fmt("1000 draws (%zu infeasible), %zu out of [1, theta0], %zu without strict "
                  "descent",
                  infeasible_draws, out_of_range, nonpositive)};
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Entry> criteria = {
      {1, "Sinkhorn equivalence at theta0 = 1", criterion_sk_equivalence},
      {2, "feasibility of converged solves", criterion_feasibility},
      {3, "Lyapunov monotonicity along the adaptive iteration", criterion_lyapunov_monotonicity},
      {4, "computable decrease matches the KL difference", criterion_decrease_formula},
      {5, "F(P^theta) monotone in theta", criterion_theta_monotonicity},
      {6, "local rate prediction", criterion_local_rates},
      {7, "rate-function identities", criterion_rate_identities},
      {8, "speedup reproduction on setting (a)", criterion_speedup},
      {9, "estimated strategy close to measured", criterion_estimated_vs_measured},
      {10, "projection endpoint and involution identities", criterion_projection_identities},
      {11, "adaptive safeguard", criterion_adaptive_safeguard},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] %2d. %s — %s\n", outcome.passed ? "PASS" : "FAIL", c.id, c.name,
                outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.passed) ++failures;
  }
  std::printf("%d/%zu criteria passed (total %.0f s)\n",
              static_cast<int>(criteria.size()) - failures, criteria.size(), now_seconds());
  return failures == 0 ? 0 : 1;
}
