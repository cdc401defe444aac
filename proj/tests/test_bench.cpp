#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "cpmp/bench.hpp"

using namespace cpmp;

TEST_CASE("the problem catalog is fixed and well formed") {
  const auto cases = catalog();
  REQUIRE(cases.size() == 4);
  CHECK(cases[0].problem.name == "double_integrator_min_time");
  CHECK(cases[1].problem.name == "min_time_to_line");
  CHECK(cases[2].problem.name == "lq_terminal_cost");
  CHECK(cases[3].problem.name == "linear_pairing");
  for (const auto& c : cases) CHECK_NOTHROW(c.problem.validate());

  CHECK(find_case("lq_terminal_cost").problem.n == 1);
  CHECK_THROWS_AS(find_case("nonexistent_case"), InvalidInput);
}

TEST_CASE("frozen closed-form data matches the hand computations") {
  const auto& di = find_case("double_integrator_min_time");
  REQUIRE(di.oracle);
  CHECK(*di.oracle->t1 == 2.0);
  CHECK(*di.oracle->cost == 2.0);
  REQUIRE(di.oracle->switch_times.size() == 1);
  CHECK(di.oracle->switch_times[0] == 1.0);
  CHECK((*di.oracle->costate0 - (Eigen::Vector2d() << -1, -1).finished()).norm() == 0.0);

  const auto& line = find_case("min_time_to_line");
  REQUIRE(line.oracle);
  CHECK(*line.oracle->t1 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

  const auto& lq = find_case("lq_terminal_cost");
  REQUIRE(lq.oracle);
  CHECK(*lq.oracle->cost == 0.25);
  CHECK((*lq.oracle->costate0)[0] == -0.5);
  CHECK_FALSE(lq.problem.time.free_terminal);

  // The pairing benchmark has no closed form on file.
  CHECK_FALSE(find_case("linear_pairing").oracle.has_value());
}

TEST_CASE("brute-force oracle reproduces the linear-quadratic minimum") {
  const auto& lq = find_case("lq_terminal_cost");
  const DirectOracleResult r =
      direct_oracle(lq.problem, lq.direct.intervals, lq.direct.grid_points);
  CHECK(r.t1 == 1.0);
  CHECK(r.penalty == 0.0);  // free endpoint: nothing to penalize
  CHECK(std::abs(r.cost - 0.25) < 2e-3);
  CHECK(r.schedule.size() == 4);
  CHECK(r.evaluations == 194481);  // 21^4 schedules
  // The optimal schedule is u = -1/2 throughout; the 21-point grid on
  // [-1, 1] contains -0.5 exactly, so each interval should pick it.
  for (const Vec& u : r.schedule) CHECK(u[0] == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("brute-force oracle searches candidate horizons on free-time problems") {
  const auto& di = find_case("double_integrator_min_time");
  const DirectOracleResult r = direct_oracle(di.problem, di.direct.intervals,
                                             di.direct.grid_points, di.direct.time_grid);
  // The bang-bang optimum (u = -1, -1, +1, +1 over four intervals of 1/2)
  // is exactly representable at t1 = 2, which the candidate grid contains.
  CHECK(std::abs(r.t1 - 2.0) < 1e-9);
  CHECK(std::abs(r.cost - 2.0) < 1e-6);
  CHECK(r.penalty < 1e-9);

  SUBCASE("configuration errors") {
    CHECK_THROWS_AS(direct_oracle(di.problem, 0, 3, di.direct.time_grid), InvalidInput);
    CHECK_THROWS_AS(direct_oracle(di.problem, 4, 3, {}), InvalidInput);  // free time, no grid
    const auto& lq = find_case("lq_terminal_cost");
    CHECK_THROWS_AS(direct_oracle(lq.problem, 6, 21), BudgetExceeded);  // 21^6 > 1e7
  }
}

TEST_CASE("benchmark table runs every case to convergence") {
  const auto rows = run_benchmarks();
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].name == "double_integrator_min_time");
  CHECK(rows[3].name == "linear_pairing");
  for (const auto& row : rows) {
    CAPTURE(row.name);
    CHECK(row.converged);
    CHECK(row.max_principle_defect <= 1e-8);
    CHECK(row.pairing_defect <= 1e-6);
    REQUIRE(row.direct_cost.has_value());
    // The indirect solution can never lose to a discretized schedule by more
    // than the discretization's own slack.
    CHECK(row.solver_cost <= *row.direct_cost + 1e-6);
  }
  CHECK(rows[0].t1 == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(rows[1].t1 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
  CHECK(rows[2].solver_cost == doctest::Approx(0.25).epsilon(1e-8));
  REQUIRE(rows[0].analytic_cost.has_value());
  CHECK_FALSE(rows[3].analytic_cost.has_value());

  SUBCASE("CSV rendering is schema-stable and free of wall-clock data") {
    const std::string csv = bench_csv(rows);
    std::istringstream is(csv);
    std::string header;
    std::getline(is, header);
    CHECK(header ==
          "case,converged,solver_cost,t1,residual_sup,max_principle_defect,pairing_defect,"
          "analytic_cost,analytic_gap,direct_cost,direct_gap,direct_penalty");
    int data_lines = 0;
    for (std::string line; std::getline(is, line);)
      if (!line.empty()) ++data_lines;
    CHECK(data_lines == 4);
    CHECK(csv.find("runtime") == std::string::npos);
    // Rendering the same rows twice is byte-stable.
    CHECK(bench_csv(rows) == csv);
  }
}

TEST_CASE("problem documents override only data fields of a named case") {
  nlohmann::json doc;
  doc["problem"] = "double_integrator_min_time";
  doc["x0"] = {1.0, 0.0};
  doc["time"] = {{"mode", "fixed"}, {"t1", 3.0}};
  doc["control"] = {{"box", {{"lo", {-2.0}}, {"hi", {2.0}}}}};
  doc["target"] = {{"type", "coordinates"}, {"indices", {2}}, {"values", {0.5}}};
  doc["tolerances"] = {{"tol", 1e-6}, {"max_iter", 7}};

  ShootOptions opts;
  const OcpProblem p = problem_from_json(doc, &opts);
  CHECK(p.x0[0] == 1.0);
  CHECK_FALSE(p.time.free_terminal);
  CHECK(p.time.t1 == 3.0);
  const auto& box = std::get<BoxControlSet>(p.control);
  CHECK(box.hi[0] == 2.0);
  REQUIRE(p.target);
  CHECK(p.target->k == 1);
  CHECK(opts.tol == 1e-6);
  CHECK(opts.max_iter == 7);

  SUBCASE("free target removes the constraint") {
    nlohmann::json d2;
    d2["problem"] = "double_integrator_min_time";
    d2["target"] = {{"type", "free"}};
    d2["time"] = {{"mode", "fixed"}, {"t1", 1.0}};
    const OcpProblem q = problem_from_json(d2);
    CHECK_FALSE(q.target.has_value());
  }

  SUBCASE("rejects malformed documents") {
    CHECK_THROWS_AS(problem_from_json(nlohmann::json::array()), InvalidInput);
    nlohmann::json bad;
    bad["problem"] = "no_such_problem";
    CHECK_THROWS_AS(problem_from_json(bad), InvalidInput);

    bad["problem"] = "double_integrator_min_time";
    bad["x0"] = {1.0};  // wrong dimension, caught by validate()
    CHECK_THROWS_AS(problem_from_json(bad), InvalidInput);

    nlohmann::json bad_mode;
    bad_mode["problem"] = "double_integrator_min_time";
    bad_mode["time"] = {{"mode", "sometimes"}};
    CHECK_THROWS_AS(problem_from_json(bad_mode), InvalidInput);

    nlohmann::json bad_tol;
    bad_tol["problem"] = "double_integrator_min_time";
    bad_tol["tolerances"] = {{"tol", -1.0}};
    ShootOptions o2;
    CHECK_THROWS_AS(problem_from_json(bad_tol, &o2), InvalidInput);

    nlohmann::json bad_control;
    bad_control["problem"] = "double_integrator_min_time";
    bad_control["control"] = {{"sphere", 1.0}};
    CHECK_THROWS_AS(problem_from_json(bad_control), InvalidInput);
  }
}
