#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cpmp/shoot.hpp"

namespace cpmp {

// Frozen closed-form solution data used to cross-check the solver.
struct AnalyticOracle {
  std::optional<double> cost;
  std::optional<double> t1;
  std::vector<double> switch_times;
  std::optional<Vec> costate0;    // initial chart costate
  std::optional<Vec> costate1;    // terminal chart costate
  std::optional<Vec> multipliers; // transversality multipliers c
};

// Settings for the brute-force cross-check on this case.
struct DirectOracleSpec {
  int intervals = 4;
  int grid_points = 21;
  std::vector<double> time_grid;  // free-time cases: candidate terminal times
};

struct BenchmarkCase {
  OcpProblem problem;
  std::optional<AnalyticOracle> oracle;
  ShootingUnknowns start;  // recommended initial guess
  DirectOracleSpec direct;
};

// Built-in problem suite; every problem referenced by name elsewhere (CLI,
// JSON ingestion) lives here.
std::vector<BenchmarkCase> catalog();
const BenchmarkCase& find_case(const std::string& name);  // throws InvalidInput

struct DirectOracleResult {
  double cost = 0.0;     // running + terminal cost + target penalty
  double penalty = 0.0;  // penalty component at the winner
  double t1 = 0.0;
  std::vector<Vec> schedule;  // winning per-interval controls
  std::size_t evaluations = 0;
};

// Exhaustive minimization over piecewise-constant schedules with values on
// the control grid and, for free-time problems, terminal times on time_grid.
// Target violation is charged as 1e4 * |g(x1)|^2.  The enumeration budget
// (schedules x times) is capped at 1e7.
DirectOracleResult direct_oracle(const OcpProblem& p, int intervals, int grid_points,
                                 std::vector<double> time_grid = {});

struct BenchRow {
  std::string name;
  bool converged = false;
  double solver_cost = 0.0;
  double t1 = 0.0;
  double residual_norm = 0.0;
  double max_principle_defect = 0.0;
  double pairing_defect = 0.0;
  std::optional<double> analytic_cost;
  std::optional<double> direct_cost;
  std::optional<double> direct_penalty;
  double runtime_seconds = 0.0;  // logged separately, never written to data files
};

std::vector<BenchRow> run_benchmarks(const ShootOptions& opts = {});

// Fixed-schema CSV of the comparison table.  Contains no wall-clock fields:
// identical runs must produce identical bytes.
std::string bench_csv(const std::vector<BenchRow>& rows);

// Problem ingestion: {"problem": <catalog name>, "x0": [...], "t0": ...,
// "time": {"mode": "free"|"fixed", "t1": ...}, "control": {"box": {"lo": [...],
// "hi": [...]}} | {"list": [[...], ...]}, "target": {"type": "point", "x": [...]}
// | {"type": "coordinates", "indices": [...], "values": [...]} | {"type":
// "free"}, "tolerances": {"tol": ..., "max_iter": ...}}.  Dynamics always come
// from the named catalog entry; only data fields can be overridden.
OcpProblem problem_from_json(const nlohmann::json& doc, ShootOptions* opts = nullptr);
OcpProblem load_problem_file(const std::string& path, ShootOptions* opts = nullptr);

}  // namespace cpmp
