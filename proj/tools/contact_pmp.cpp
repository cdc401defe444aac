// contact_pmp: command-line front end for the contact-geometric indirect
// optimal-control solver.
//
// Subcommands:
//   list    enumerate built-in benchmark problems
//   solve   solve one problem by indirect shooting; emit report + trajectory
//   verify  run the numerical invariant suites and print pass/fail lines
//   bench   run the benchmark catalog against its oracles; emit a CSV table
//
// Exit status: 0 success, 1 solver non-convergence (or failed verify checks /
// non-converged benchmark rows), 2 invalid input.  Errors are printed to
// stderr as one-line JSON objects {"error": {"code", "message"}}.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cpmp/bench.hpp"
#include "cpmp/errors.hpp"
#include "cpmp/io.hpp"
#include "cpmp/shoot.hpp"
#include "cpmp/verify.hpp"

namespace {

using cpmp::Vec;

std::string error_json(const std::string& code, const std::string& message) {
  nlohmann::json j;
  j["error"]["code"] = code;
  j["error"]["message"] = message;
  return j.dump();
}

Vec to_vec(const std::vector<double>& v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

struct SolveConfig {
  std::string problem;
  std::string problem_json;
  std::vector<double> x0;
  std::vector<double> guess;
  std::optional<double> t1;
  std::string time_mode;  // "", "free", "fixed"
  std::string chart = "auto";
  std::string out;
  std::string format = "json";
  cpmp::ShootOptions opts;
};

int run_solve(SolveConfig& cfg) {
  cpmp::OcpProblem p;
  cpmp::ShootingUnknowns z;
  if (!cfg.problem_json.empty()) {
    p = cpmp::load_problem_file(cfg.problem_json, &cfg.opts);
    z.costate0 = Vec::Zero(p.n);
  } else if (!cfg.problem.empty()) {
    const cpmp::BenchmarkCase& c = cpmp::find_case(cfg.problem);
    p = c.problem;
    z = c.start;
  } else {
    throw cpmp::InvalidInput("solve needs --problem or --problem-json");
  }

  if (!cfg.x0.empty()) {
    if (static_cast<Eigen::Index>(cfg.x0.size()) != p.n)
      throw cpmp::InvalidInput("--x0 must supply exactly n components");
    p.x0 = to_vec(cfg.x0);
  }
  if (cfg.time_mode == "free") {
    p.time = cpmp::TimeMode::free_time();
  } else if (cfg.time_mode == "fixed") {
    if (!cfg.t1) throw cpmp::InvalidInput("--time-mode fixed requires --t1");
    p.time = cpmp::TimeMode::fixed(*cfg.t1);
  } else if (!cfg.time_mode.empty()) {
    throw cpmp::InvalidInput("--time-mode must be free or fixed");
  } else if (cfg.t1 && !p.time.free_terminal) {
    p.time = cpmp::TimeMode::fixed(*cfg.t1);
  }
  if (!cfg.guess.empty()) {
    z.chart = cpmp::ChartTarget::normal();
    z.costate0 = to_vec(cfg.guess);
  }
  if (p.time.free_terminal) {
    if (cfg.t1)
      z.t1 = *cfg.t1;
    else if (!z.t1)
      z.t1 = p.t0 + 1.0;
  } else {
    z.t1.reset();
  }

  if (cfg.chart == "normal")
    cfg.opts.chart_policy = cpmp::ShootOptions::ChartPolicy::NormalOnly;
  else if (cfg.chart == "abnormal")
    cfg.opts.chart_policy = cpmp::ShootOptions::ChartPolicy::AbnormalOnly;
  else if (cfg.chart == "auto")
    cfg.opts.chart_policy = cpmp::ShootOptions::ChartPolicy::Auto;
  else
    throw cpmp::InvalidInput("--chart must be normal, abnormal or auto");

  cpmp::ShootingResult result = cpmp::solve(p, z, cfg.opts);
  result.diagnostics = cpmp::verify_extremal(p, result, cfg.opts);

  const std::string report = cpmp::solve_report_json(p, result).dump(2) + "\n";
  const std::string csv = cpmp::trajectory_csv(result.trajectory);
  if (!cfg.out.empty()) {
    cpmp::write_text_file(cfg.out + ".json", report);
    cpmp::write_text_file(cfg.out + ".csv", csv);
    std::cerr << "wrote " << cfg.out << ".json and " << cfg.out << ".csv\n";
  } else if (cfg.format == "csv") {
    std::cout << csv;
  } else {
    std::cout << report;
  }
  return 0;
}

int run_verify(const std::string& suite) {
  const std::vector<cpmp::CheckResult> checks = cpmp::verify_suite(suite);
  bool all_pass = true;
  for (const cpmp::CheckResult& c : checks) {
    char line[256];
    std::snprintf(line, sizeof(line), "%-28s measured %.3e  bound %s %.3e  %s",
                  c.name.c_str(), c.measured, c.lower_is_pass ? "<=" : ">=", c.bound,
                  c.pass ? "PASS" : "FAIL");
    std::cout << line << "\n";
    all_pass = all_pass && c.pass;
  }
  return all_pass ? 0 : 1;
}

int run_bench(const std::string& out, const cpmp::ShootOptions& opts) {
  const std::vector<cpmp::BenchRow> rows = cpmp::run_benchmarks(opts);
  const std::string csv = cpmp::bench_csv(rows);
  if (!out.empty()) {
    cpmp::write_text_file(out, csv);
    std::cerr << "wrote " << out << "\n";
  } else {
    std::cout << csv;
  }
  bool all_converged = true;
  for (const cpmp::BenchRow& row : rows) {
    std::fprintf(stderr, "case %-28s converged=%d runtime=%.3fs\n", row.name.c_str(),
                 row.converged ? 1 : 0, row.runtime_seconds);
    all_converged = all_converged && row.converged;
  }
  return all_converged ? 0 : 1;
}

int run_list() {
  for (const cpmp::BenchmarkCase& c : cpmp::catalog()) std::cout << c.problem.name << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Indirect optimal-control solver using contact-geometric costate charts"};
  app.require_subcommand(1);

  CLI::App* list_cmd = app.add_subcommand("list", "List built-in problems");

  SolveConfig cfg;
  CLI::App* solve_cmd = app.add_subcommand("solve", "Solve a problem by indirect shooting");
  solve_cmd->add_option("--problem", cfg.problem, "Built-in problem name (see `list`)");
  solve_cmd->add_option("--problem-json", cfg.problem_json, "Path to a problem JSON file");
  solve_cmd->add_option("--x0", cfg.x0, "Initial state, comma separated")->delimiter(',');
  solve_cmd->add_option("--guess", cfg.guess, "Initial costate guess (normal chart)")
      ->delimiter(',');
  double t1_flag = 0.0;
  CLI::Option* t1_opt = solve_cmd->add_option(
      "--t1", t1_flag, "Terminal time (fixed mode) or initial guess (free mode)");
  solve_cmd->add_option("--time-mode", cfg.time_mode, "free or fixed")
      ->check(CLI::IsMember({"free", "fixed"}));
  solve_cmd->add_option("--tol", cfg.opts.tol, "Residual sup-norm tolerance");
  solve_cmd->add_option("--max-iter", cfg.opts.max_iter, "Newton iteration cap");
  solve_cmd->add_option("--multistart", cfg.opts.multistart, "Extra random starts");
  solve_cmd->add_option("--seed", cfg.opts.seed, "Seed for generated starts");
  solve_cmd->add_option("--chart", cfg.chart, "Chart policy: normal, abnormal or auto")
      ->check(CLI::IsMember({"normal", "abnormal", "auto"}));
  solve_cmd->add_option("--out", cfg.out, "Output path prefix (<out>.json, <out>.csv)");
  solve_cmd->add_option("--format", cfg.format, "Stdout format when --out is absent")
      ->check(CLI::IsMember({"json", "csv"}));

  std::string suite = "all";
  CLI::App* verify_cmd = app.add_subcommand("verify", "Run the numerical invariant suites");
  verify_cmd->add_option("--suite", suite,
                         "homogeneity, pairing, chart, contact_symplectic, psi_k or all");

  std::string bench_out;
  cpmp::ShootOptions bench_opts;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Run the benchmark catalog");
  bench_cmd->add_option("--out", bench_out, "CSV output path (stdout when absent)");
  bench_cmd->add_option("--tol", bench_opts.tol, "Residual sup-norm tolerance");
  bench_cmd->add_option("--max-iter", bench_opts.max_iter, "Newton iteration cap");
  bench_cmd->add_option("--multistart", bench_opts.multistart, "Extra random starts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << error_json("InvalidInput", e.what()) << "\n";
    return 2;
  }

  try {
    if (*list_cmd) return run_list();
    if (*solve_cmd) {
      if (t1_opt->count() > 0) cfg.t1 = t1_flag;
      return run_solve(cfg);
    }
    if (*verify_cmd) return run_verify(suite);
    if (*bench_cmd) return run_bench(bench_out, bench_opts);
  } catch (const cpmp::NoConvergence& e) {
    std::cerr << error_json(e.code(), e.what()) << "\n";
    return 1;
  } catch (const cpmp::Error& e) {
    std::cerr << error_json(e.code(), e.what()) << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << error_json("InternalError", e.what()) << "\n";
    return 2;
  }
  return 0;
}
