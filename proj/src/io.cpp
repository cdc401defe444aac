#include "cpmp/io.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cpmp/errors.hpp"

namespace cpmp {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

std::string trajectory_csv(const ExtremalTrajectory& traj) {
  if (traj.samples.empty()) throw InvalidInput("cannot export an empty trajectory");
  const Eigen::Index n = traj.samples.front().xhat.n();
  const Eigen::Index m = traj.samples.front().u.size();
  std::ostringstream os;
  os << "t,x0";
  for (Eigen::Index i = 1; i <= n; ++i) os << ",x" << i;
  os << ",chart";
  for (Eigen::Index i = 1; i <= n; ++i) os << ",c" << i;
  for (Eigen::Index i = 1; i <= m; ++i) os << ",u" << i;
  os << ",h_value\n";
  for (const auto& s : traj.samples) {
    os << format_double(s.t) << ',' << format_double(s.xhat.x0);
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_double(s.xhat.x[i]);
    os << ',' << s.pc.chart_name();
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_double(s.pc.coords()[i]);
    for (Eigen::Index i = 0; i < m; ++i)
      os << ',' << format_double(i < s.u.size() ? s.u[i] : std::numeric_limits<double>::quiet_NaN());
    os << ',' << format_double(s.h) << '\n';
  }
  return os.str();
}

namespace {

nlohmann::json vec_json(const Vec& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace

nlohmann::json solve_report_json(const OcpProblem& p, const ShootingResult& r) {
  nlohmann::json j;
  j["schema"] = "1";
  j["problem"] = p.name;
  j["converged"] = r.converged;
  j["classification"] = r.classification;
  j["iterations"] = r.iterations;
  j["t1"] = r.t1;
  j["cost"] = r.cost;
  j["residual_norm"] = r.residual_norm;
  j["residual_blocks"] = r.residual_blocks;
  nlohmann::json z;
  z["chart"] = r.unknowns.chart.chart == Chart::Normal
                   ? std::string("normal")
                   : "abnormal:" + std::to_string(r.unknowns.chart.pivot);
  z["costate0"] = vec_json(r.unknowns.costate0);
  if (r.unknowns.t1) z["t1"] = *r.unknowns.t1;
  z["c"] = vec_json(r.unknowns.c);
  j["unknowns"] = z;
  j["residual_history"] = r.residual_history;
  j["diagnostics"] = r.diagnostics;
  j["control_switch_times"] = r.trajectory.control_switch_times;
  j["chart_switch_times"] = r.trajectory.chart_switch_times;
  nlohmann::json attempts = nlohmann::json::array();
  for (const auto& a : r.attempts) {
    nlohmann::json aj;
    aj["start"] = vec_json(a.start);
    aj["converged"] = a.converged;
    aj["cost"] = a.cost;
    aj["t1"] = a.t1;
    aj["residual_norm"] = a.residual_norm;
    aj["iterations"] = a.iterations;
    attempts.push_back(aj);
  }
  j["attempts"] = attempts;
  return j;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open for writing: " + path);
  out << content;
  if (!out.good()) throw InvalidInput("failed writing: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open for reading: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace cpmp
