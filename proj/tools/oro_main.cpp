// Command-line front end: solve a problem from CSV inputs, report local
// convergence rates, or run the speed-ratio benchmark.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "oro/oro.hpp"

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write file: " + path);
  out << content;
}

oro::TransportProblem load_problem(const std::string& cost_path, const std::string& mu1_path,
                                   const std::string& mu2_path, double epsilon) {
  oro::Matrix cost = oro::matrix_from_csv(read_file(cost_path));
  oro::Vector mu1 = oro::vector_from_csv(read_file(mu1_path));
  oro::Vector mu2 = oro::vector_from_csv(read_file(mu2_path));
  return oro::TransportProblem(std::move(cost), std::move(mu1), std::move(mu2), epsilon);
}

json omega_summary(const oro::SolveReport& rep) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo, mean = 0.0, last = 1.0;
  std::size_t count = 0;
  for (const auto& rec : rep.trace) {
    for (double w : {rec.omega_row, rec.omega_col}) {
      lo = std::min(lo, w);
      hi = std::max(hi, w);
      mean += w;
      last = w;
      ++count;
    }
  }
  if (count == 0) return json{{"min", nullptr}, {"max", nullptr}, {"mean", nullptr}, {"final", nullptr}};
  return json{{"min", lo}, {"max", hi}, {"mean", mean / static_cast<double>(count)}, {"final", last}};
}

const char* status_name(oro::TerminationStatus s) {
  switch (s) {
    case oro::TerminationStatus::Converged: return "converged";
    case oro::TerminationStatus::MaxIterations: return "max_iterations";
    case oro::TerminationStatus::Diverged: return "diverged";
  }
  return "?";
}

int cmd_solve(const std::string& cost_path, const std::string& mu1_path,
              const std::string& mu2_path, double epsilon, const std::string& method,
              double omega, double theta0, double delta, double tol, std::size_t max_iter,
              double dual_target, const std::string& out_path, const std::string& report_path) {
  oro::TransportProblem problem = load_problem(cost_path, mu1_path, mu2_path, epsilon);

  oro::SolveConfig cfg;
  cfg.tol = tol;
  cfg.max_iter = max_iter;
  cfg.record_telemetry = true;
  if (dual_target > 0.0) cfg.dual_precision_target = dual_target;
  if (method == "sinkhorn") {
    cfg.method = oro::Method::Sinkhorn;
  } else if (method == "fixed") {
    cfg.method = oro::Method::FixedOmega;
    cfg.omega = omega;
  } else if (method == "adaptive") {
    cfg.method = oro::Method::Adaptive;
    cfg.relaxation.theta0 = theta0;
    cfg.relaxation.delta = delta;
  } else {
    throw std::invalid_argument("unknown method: " + method +
                                " (expected sinkhorn, fixed or adaptive)");
  }

  const oro::SolveReport rep = oro::solve(problem, cfg);
  const oro::TransportPlan plan = oro::plan_from_state(problem, rep.final_state);
  write_file(out_path, oro::matrix_to_csv(plan.entries));

  json report{
      {"method", method},
      {"epsilon", epsilon},
      {"tol", tol},
      {"max_iter", max_iter},
      {"iterations", rep.iterations},
      {"converged", rep.converged},
      {"status", status_name(rep.status)},
      {"final_row_error", rep.final_row_error},
      {"final_col_error", rep.final_col_error},
      {"kernel_applications", rep.kernel_applications},
      {"dual_objective", oro::dual_objective(problem, rep.final_state)},
      {"omega", omega_summary(rep)},
  };
  if (cfg.method == oro::Method::Adaptive) {
    report["theta0"] = theta0;
    report["delta"] = delta;
  }
  if (cfg.method == oro::Method::FixedOmega) report["fixed_omega"] = omega;
  write_file(report_path, report.dump(2) + "\n");

  std::printf("%s: %s after %zu iterations (row residual %.3e, col residual %.3e)\n",
              method.c_str(), status_name(rep.status), rep.iterations, rep.final_row_error,
              rep.final_col_error);
  return rep.converged ? 0 : 2;
}

int cmd_rate(const std::string& cost_path, const std::string& mu1_path,
             const std::string& mu2_path, double epsilon, double reference_tol,
             const std::string& out_path) {
  oro::TransportProblem problem = load_problem(cost_path, mu1_path, mu2_path, epsilon);
  const oro::SpectralReport sr = oro::compute_spectral_report(problem, reference_tol);
  json out{
      {"eta", sr.eta},
      {"sk_rate", sr.sk_rate},
      {"theta_opt", sr.theta_opt},
      {"or_rate", sr.or_rate},
  };
  const std::string text = out.dump(2) + "\n";
  std::fputs(text.c_str(), stdout);
  if (!out_path.empty()) write_file(out_path, text);
  return 0;
}

int cmd_benchmark(const std::string& setting_name, std::size_t n, std::uint64_t seed,
                  const std::string& strategy_name, double fixed_theta, std::size_t instances,
                  std::vector<double> epsilons, std::size_t eps_count, double eps_min_rel,
                  double eps_max_rel, double dual_target, std::size_t max_iter,
                  const std::string& csv_path, const std::string& json_path) {
  oro::ExperimentSetting setting;
  if (setting_name == "a") {
    setting.kind = oro::SettingKind::QuadraticPlateaus;
  } else if (setting_name == "b") {
    setting.kind = oro::SettingKind::RandomCostUniform;
  } else {
    throw std::invalid_argument("unknown setting: " + setting_name + " (expected a or b)");
  }
  if (strategy_name == "estimated") {
    setting.strategy = oro::ThetaStrategy::Estimated;
  } else if (strategy_name == "measured") {
    setting.strategy = oro::ThetaStrategy::Measured;
  } else if (strategy_name == "fixed") {
    setting.strategy = oro::ThetaStrategy::FixedTheta;
  } else {
    throw std::invalid_argument("unknown strategy: " + strategy_name +
                                " (expected estimated, measured or fixed)");
  }
  setting.n = n;
  setting.seed = seed;
  setting.fixed_theta = fixed_theta;
  setting.instances = instances;
  setting.dual_target = dual_target;
  setting.max_iter = max_iter;
  setting.epsilon_list = epsilons.empty()
                             ? oro::default_epsilon_grid(setting.kind, n, eps_count, eps_min_rel,
                                                         eps_max_rel)
                             : std::move(epsilons);

  const oro::BenchResult result = oro::run_speed_ratio(setting);
  write_file(csv_path, oro::to_csv(result));

  auto row_to_json = [](const oro::BenchRow& r) {
    return json{
        {"setting", oro::to_string(r.kind)},
        {"epsilon", r.epsilon},
        {"strategy", oro::to_string(r.strategy)},
        {"instance", r.instance},
        {"eta", r.eta},
        {"theta0", r.theta0},
        {"sk_iters", r.sk_iterations},
        {"or_iters", r.or_iterations},
        {"ratio", r.ratio},
        {"converged_sk", r.converged_sk},
        {"converged_or", r.converged_or},
    };
  };
  json summary{
      {"setting", oro::to_string(setting.kind)},
      {"strategy", oro::to_string(setting.strategy)},
      {"n", setting.n},
      {"seed", setting.seed},
      {"instances", setting.instances},
      {"dual_target", setting.dual_target},
      {"epsilons", setting.epsilon_list},
      {"per_epsilon", json::array()},
      {"cells", json::array()},
  };
  for (const auto& r : result.per_epsilon) summary["per_epsilon"].push_back(row_to_json(r));
  for (const auto& r : result.cells) summary["cells"].push_back(row_to_json(r));
  write_file(json_path, summary.dump(2) + "\n");

  std::size_t failed = 0;
  for (const auto& c : result.cells)
    if (!c.converged_sk || !c.converged_or) ++failed;
  std::printf("benchmark: %zu cells, %zu with failures; results in %s and %s\n",
              result.cells.size(), failed, csv_path.c_str(), json_path.c_str());
  return failed == result.cells.size() ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropic optimal transport via Sinkhorn iterations with safeguarded "
               "overrelaxation"};
  app.require_subcommand(1);

  // solve
  std::string cost_path, mu1_path, mu2_path;
  double epsilon = 0.1;
  std::string method = "adaptive";
  double omega = 1.5, theta0 = 1.8, delta = 0.01, tol = 1e-9, dual_target = 0.0;
  std::size_t max_iter = 100000;
  std::string out_path = "plan.csv", report_path = "report.json";
  auto* solve_cmd = app.add_subcommand("solve", "Solve a transport problem from CSV inputs");
  solve_cmd->add_option("--cost", cost_path, "Cost matrix CSV")->required();
  solve_cmd->add_option("--mu1", mu1_path, "Row marginal CSV (one value per line)")->required();
  solve_cmd->add_option("--mu2", mu2_path, "Column marginal CSV (one value per line)")->required();
  solve_cmd->add_option("--epsilon", epsilon, "Regularization strength")->required();
  solve_cmd->add_option("--method", method, "sinkhorn | fixed | adaptive (default adaptive)");
  solve_cmd->add_option("--omega", omega, "Relaxation parameter for --method fixed, in (0,2)");
  solve_cmd->add_option("--theta0", theta0, "Target parameter for --method adaptive, in [1,2)");
  solve_cmd->add_option("--delta", delta, "Security distance for --method adaptive");
  solve_cmd->add_option("--tol", tol, "Stopping threshold on the L-inf marginal residual");
  solve_cmd->add_option("--max-iter", max_iter, "Iteration cap");
  solve_cmd->add_option("--dual-target", dual_target,
                        "Also require the per-iteration dual step below this value (0 = off)");
  solve_cmd->add_option("--out", out_path, "Output plan CSV (default plan.csv)");
  solve_cmd->add_option("--report", report_path, "Output JSON report (default report.json)");

  // rate
  double reference_tol = 1e-12;
  std::string rate_out;
  auto* rate_cmd = app.add_subcommand("rate", "Local convergence-rate analysis");
  rate_cmd->add_option("--cost", cost_path, "Cost matrix CSV")->required();
  rate_cmd->add_option("--mu1", mu1_path, "Row marginal CSV")->required();
  rate_cmd->add_option("--mu2", mu2_path, "Column marginal CSV")->required();
  rate_cmd->add_option("--epsilon", epsilon, "Regularization strength")->required();
  rate_cmd->add_option("--reference-tol", reference_tol, "Residual of the reference solve");
  rate_cmd->add_option("--out", rate_out, "Also write the JSON to this file");

  // benchmark
  std::string setting_name = "a", strategy_name = "estimated";
  std::size_t n = 100, instances = 5, eps_count = 7;
  std::uint64_t seed = 42;
  double fixed_theta = 1.0, eps_min_rel = 1e-3, eps_max_rel = 1.0, bench_target = 1e-6;
  std::size_t bench_max_iter = 1000000;
  std::vector<double> epsilons;
  std::string csv_path = "bench.csv", json_path = "bench.json";
  auto* bench_cmd = app.add_subcommand("benchmark", "Sinkhorn vs overrelaxed speed ratios");
  bench_cmd->add_option("--setting", setting_name, "a (quadratic cost) | b (random cost)")
      ->required();
  bench_cmd->add_option("--n", n, "Problem size (default 100)");
  bench_cmd->add_option("--seed", seed, "Base seed (default 42)");
  bench_cmd->add_option("--strategy", strategy_name, "estimated | measured | fixed");
  bench_cmd->add_option("--theta0", fixed_theta, "Theta for --strategy fixed");
  bench_cmd->add_option("--instances", instances, "Problems per epsilon (default 5)");
  bench_cmd->add_option("--epsilons", epsilons, "Explicit epsilon values")->delimiter(',');
  bench_cmd->add_option("--eps-count", eps_count, "Points in the default log grid");
  bench_cmd->add_option("--eps-min-rel", eps_min_rel, "Grid lower bound, relative to max cost");
  bench_cmd->add_option("--eps-max-rel", eps_max_rel, "Grid upper bound, relative to max cost");
  bench_cmd->add_option("--dual-target", bench_target, "Dual precision measured (default 1e-6)");
  bench_cmd->add_option("--max-iter", bench_max_iter, "Iteration cap per solve");
  bench_cmd->add_option("--out-csv", csv_path, "Output CSV (default bench.csv)");
  bench_cmd->add_option("--out-json", json_path, "Output JSON (default bench.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (solve_cmd->parsed())
      return cmd_solve(cost_path, mu1_path, mu2_path, epsilon, method, omega, theta0, delta, tol,
                       max_iter, dual_target, out_path, report_path);
    if (rate_cmd->parsed())
      return cmd_rate(cost_path, mu1_path, mu2_path, epsilon, reference_tol, rate_out);
    if (bench_cmd->parsed())
      return cmd_benchmark(setting_name, n, seed, strategy_name, fixed_theta, instances, epsilons,
                           eps_count, eps_min_rel, eps_max_rel, bench_target, bench_max_iter,
                           csv_path, json_path);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
