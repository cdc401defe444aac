#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "cpmp/shoot.hpp"

namespace cpmp {

// Fixed-width scientific rendering (17 significant digits) used by every
// data-file writer, so identical runs emit identical bytes.
std::string format_double(double v);

// Trajectory table: t,x0,x1..xn,chart,c1..cn,h_value.  The c columns hold the
// chart coordinates (lambda in the normal chart, alpha in an abnormal one);
// the chart column names the chart, e.g. "normal" or "abnormal:2".
std::string trajectory_csv(const ExtremalTrajectory& traj);

// Machine-readable solve report (schema "1"): unknowns, residual blocks,
// classification, diagnostics, switch times, multi-start attempts.
nlohmann::json solve_report_json(const OcpProblem& p, const ShootingResult& r);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace cpmp
