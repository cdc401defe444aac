#include "cpmp/bench.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cpmp/errors.hpp"
#include "cpmp/io.hpp"
#include "cpmp/parallel.hpp"

namespace cpmp {
namespace {

constexpr double kTargetPenalty = 1e4;
constexpr int kOracleStepsPerSegment = 32;

Vec vec1(double a) {
  Vec v(1);
  v << a;
  return v;
}

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

std::vector<double> linspace(double a, double b, int count) {
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    out[static_cast<std::size_t>(i)] = a + (b - a) * i / (count - 1);
  return out;
}

BenchmarkCase make_double_integrator(bool to_line) {
  OcpProblem p;
  p.name = to_line ? "min_time_to_line" : "double_integrator_min_time";
  p.n = 2;
  p.m = 1;
  p.f = [](const Vec& x, const Vec& u) { return vec2(x[1], u[0]); };
  p.L = [](const Vec&, const Vec&) { return 1.0; };
  p.dfdx = [](const Vec&, const Vec&) {
    Mat J(2, 2);
    J << 0, 1, 0, 0;
    return J;
  };
  p.dLdx = [](const Vec&, const Vec&) { return Vec(Vec::Zero(2)); };
  p.control = BoxControlSet{vec1(-1.0), vec1(1.0)};
  p.x0 = vec2(1.0, 0.0);
  p.t0 = 0.0;
  p.target = to_line ? target_coordinates({1}, vec1(0.0), 2) : target_point(Vec::Zero(2));
  p.time = TimeMode::free_time();
  // Bang-bang law: u maximizes lambda_2 u over [-1, 1]; ties resolve low.
  p.argmax = [](const Vec&, const Vec& lambda) { return vec1(lambda[1] > 0.0 ? 1.0 : -1.0); };

  BenchmarkCase c;
  c.problem = std::move(p);
  AnalyticOracle o;
  if (to_line) {
    // One arc u = -1; the costate stays normal to the target line.
    const double r2 = std::sqrt(2.0);
    o.cost = r2;
    o.t1 = r2;
    o.costate0 = vec2(-1.0 / r2, -1.0);
    o.costate1 = vec2(-1.0 / r2, 0.0);
    o.multipliers = vec1(-1.0 / r2);
  } else {
    // u = -1 on [0,1), +1 on (1,2]; vanishing Hamiltonian pins the scale.
    o.cost = 2.0;
    o.t1 = 2.0;
    o.switch_times = {1.0};
    o.costate0 = vec2(-1.0, -1.0);
    o.costate1 = vec2(-1.0, 1.0);
    o.multipliers = vec2(-1.0, 1.0);
  }
  c.oracle = std::move(o);
  c.start.chart = ChartTarget::normal();
  c.start.costate0 = vec2(-0.6, -0.6);
  c.start.t1 = to_line ? 1.0 : 1.5;
  c.start.c = Vec::Zero(to_line ? 1 : 2);
  c.direct.intervals = 4;
  c.direct.grid_points = 3;
  c.direct.time_grid =
      to_line ? std::vector<double>{1.2, 1.3, std::sqrt(2.0), 1.5, 1.6} : linspace(1.6, 2.4, 17);
  return c;
}

BenchmarkCase make_lq_terminal_cost() {
  OcpProblem p;
  p.name = "lq_terminal_cost";
  p.n = 1;
  p.m = 1;
  p.f = [](const Vec&, const Vec& u) { return vec1(u[0]); };
  p.L = [](const Vec&, const Vec& u) { return 0.5 * u[0] * u[0]; };
  p.dfdx = [](const Vec&, const Vec&) { return Mat(Mat::Zero(1, 1)); };
  p.dLdx = [](const Vec&, const Vec&) { return Vec(Vec::Zero(1)); };
  p.control = BoxControlSet{vec1(-1.0), vec1(1.0)};
  p.x0 = vec1(1.0);
  p.t0 = 0.0;
  TerminalCost tc;
  tc.K = [](const Vec& x) { return 0.5 * x[0] * x[0]; };
  tc.dK = [](const Vec& x) { return vec1(x[0]); };
  tc.d2K = [](const Vec&) { return Mat(Mat::Identity(1, 1)); };
  p.terminal_cost = std::move(tc);
  p.time = TimeMode::fixed(1.0);
  // max of lambda u - u^2/2 over [-1, 1].
  p.argmax = [](const Vec&, const Vec& lambda) {
    return vec1(std::clamp(lambda[0], -1.0, 1.0));
  };

  BenchmarkCase c;
  c.problem = std::move(p);
  AnalyticOracle o;
  o.cost = 0.25;
  o.t1 = 1.0;
  o.costate0 = vec1(-0.5);
  o.costate1 = vec1(-0.5);
  c.oracle = std::move(o);
  c.start.costate0 = vec1(0.0);
  c.direct.intervals = 4;
  c.direct.grid_points = 21;
  return c;
}

BenchmarkCase make_linear_pairing() {
  OcpProblem p;
  p.name = "linear_pairing";
  p.n = 3;
  p.m = 1;
  Mat A(3, 3);
  A << 0, 1, 0, 0, 0, 1, -0.5, -0.4, -0.3;
  const Vec B = (Eigen::Vector3d() << 0, 0, 1).finished();
  p.f = [A, B](const Vec& x, const Vec& u) { return Vec(A * x + B * u[0]); };
  p.L = [](const Vec& x, const Vec& u) { return 0.5 * (x.squaredNorm() + u.squaredNorm()); };
  p.dfdx = [A](const Vec&, const Vec&) { return A; };
  p.dLdx = [](const Vec& x, const Vec&) { return x; };
  p.control = BoxControlSet{vec1(-4.0), vec1(4.0)};
  p.x0 = (Eigen::Vector3d() << 1, 0, 0).finished();
  p.t0 = 0.0;
  p.time = TimeMode::fixed(1.0);
  p.argmax = [B](const Vec&, const Vec& lambda) {
    return vec1(std::clamp(B.dot(lambda), -4.0, 4.0));
  };

  BenchmarkCase c;
  c.problem = std::move(p);
  c.start.costate0 = Vec::Zero(3);
  c.direct.intervals = 4;
  c.direct.grid_points = 9;
  return c;
}

}  // namespace

std::vector<BenchmarkCase> catalog() {
  std::vector<BenchmarkCase> out;
  out.push_back(make_double_integrator(false));
  out.push_back(make_double_integrator(true));
  out.push_back(make_lq_terminal_cost());
  out.push_back(make_linear_pairing());
  return out;
}

const BenchmarkCase& find_case(const std::string& name) {
  static const std::vector<BenchmarkCase> cases = catalog();
  for (const auto& c : cases)
    if (c.problem.name == name) return c;
  throw InvalidInput("unknown problem: " + name);
}

DirectOracleResult direct_oracle(const OcpProblem& p, int intervals, int grid_points,
                                 std::vector<double> time_grid) {
  p.validate();
  if (intervals < 1) throw InvalidInput("oracle needs at least one interval");
  const std::vector<Vec> candidates = control_grid(p.control, grid_points);
  const std::size_t C = candidates.size();
  if (p.time.free_terminal) {
    if (time_grid.empty())
      throw InvalidInput("free-time oracle needs a grid of candidate terminal times");
    for (double t1 : time_grid)
      if (!(t1 > p.t0)) throw InvalidInput("candidate terminal time must exceed t0");
  } else {
    time_grid = {p.time.t1};
  }
  const double budget =
      std::pow(static_cast<double>(C), intervals) * static_cast<double>(time_grid.size());
  if (!(budget <= 1e7)) {
    std::ostringstream os;
    os << "exhaustive enumeration needs " << budget << " evaluations (cap 1e7)";
    throw BudgetExceeded(os.str());
  }
  const auto schedules =
      static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(C), intervals)));

  auto decode = [&](std::size_t s) {
    std::vector<std::size_t> digits(static_cast<std::size_t>(intervals));
    for (int i = intervals - 1; i >= 0; --i) {  // first interval most significant
      digits[static_cast<std::size_t>(i)] = s % C;
      s /= C;
    }
    return digits;
  };

  auto run = [&](const std::vector<std::size_t>& digits, double t1, double* penalty_out) {
    Vec y(p.n + 1);
    y[0] = 0.0;
    y.tail(p.n) = p.x0;
    const double seg = (t1 - p.t0) / intervals;
    for (int i = 0; i < intervals; ++i) {
      const Vec& u = candidates[digits[static_cast<std::size_t>(i)]];
      auto field = [&](double, const Vec& yy) {
        Vec dy(p.n + 1);
        dy[0] = p.L(yy.tail(p.n), u);
        dy.tail(p.n) = p.f(yy.tail(p.n), u);
        return dy;
      };
      const double h = seg / kOracleStepsPerSegment;
      double t = p.t0 + i * seg;
      for (int k = 0; k < kOracleStepsPerSegment; ++k, t += h) y = rk4_step(field, t, y, h);
    }
    const Vec x1 = y.tail(p.n);
    double cost = y[0];
    if (p.terminal_cost) cost += p.terminal_cost->K(x1);
    const double penalty = p.target ? kTargetPenalty * p.target->g(x1).squaredNorm() : 0.0;
    if (penalty_out) *penalty_out = penalty;
    return cost + penalty;
  };

  auto best_over_times = [&](std::size_t s) {
    const auto digits = decode(s);
    double best = std::numeric_limits<double>::infinity();
    for (double t1 : time_grid) {
      const double c = run(digits, t1, nullptr);
      if (std::isfinite(c) && c < best) best = c;
    }
    return best;
  };

  const std::size_t winner = parallel_argmin(schedules, best_over_times);

  DirectOracleResult out;
  out.evaluations = schedules * time_grid.size();
  const auto digits = decode(winner);
  out.cost = std::numeric_limits<double>::infinity();
  for (double t1 : time_grid) {
    double pen = 0.0;
    const double c = run(digits, t1, &pen);
    if (std::isfinite(c) && c < out.cost) {
      out.cost = c;
      out.penalty = pen;
      out.t1 = t1;
    }
  }
  out.schedule.reserve(static_cast<std::size_t>(intervals));
  for (auto d : digits) out.schedule.push_back(candidates[d]);
  return out;
}

std::vector<BenchRow> run_benchmarks(const ShootOptions& opts) {
  std::vector<BenchRow> rows;
  for (const auto& bc : catalog()) {
    BenchRow row;
    row.name = bc.problem.name;
    const auto t_start = std::chrono::steady_clock::now();
    try {
      const ShootingResult r = solve(bc.problem, bc.start, opts);
      row.converged = r.converged;
      row.solver_cost = r.cost;
      row.t1 = r.t1;
      row.residual_norm = r.residual_norm;
      auto diag = verify_extremal(bc.problem, r, opts);
      row.max_principle_defect = diag.at("max_principle_defect");
      row.pairing_defect = diag.at("pairing_defect");
    } catch (const NoConvergence&) {
      row.converged = false;
    }
    if (bc.oracle && bc.oracle->cost) row.analytic_cost = *bc.oracle->cost;
    const DirectOracleResult d =
        direct_oracle(bc.problem, bc.direct.intervals, bc.direct.grid_points, bc.direct.time_grid);
    row.direct_cost = d.cost;
    row.direct_penalty = d.penalty;
    row.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "case,converged,solver_cost,t1,residual_sup,max_principle_defect,pairing_defect,"
        "analytic_cost,analytic_gap,direct_cost,direct_gap,direct_penalty\n";
  for (const auto& r : rows) {
    os << r.name << ',' << (r.converged ? "true" : "false") << ','
       << format_double(r.solver_cost) << ',' << format_double(r.t1) << ','
       << format_double(r.residual_norm) << ',' << format_double(r.max_principle_defect) << ','
       << format_double(r.pairing_defect) << ',';
    if (r.analytic_cost)
      os << format_double(*r.analytic_cost) << ',' << format_double(r.solver_cost - *r.analytic_cost);
    else
      os << ',';
    os << ',';
    if (r.direct_cost)
      os << format_double(*r.direct_cost) << ',' << format_double(r.solver_cost - *r.direct_cost);
    else
      os << ',';
    os << ',';
    if (r.direct_penalty) os << format_double(*r.direct_penalty);
    os << '\n';
  }
  return os.str();
}

namespace {

Vec vec_from_json(const nlohmann::json& a) {
  if (!a.is_array()) throw InvalidInput("expected a JSON array of numbers");
  Vec v(static_cast<Eigen::Index>(a.size()));
  Eigen::Index i = 0;
  for (const auto& e : a) v[i++] = e.get<double>();
  return v;
}

}  // namespace

OcpProblem problem_from_json(const nlohmann::json& doc, ShootOptions* opts) {
  if (!doc.is_object() || !doc.contains("problem"))
    throw InvalidInput("problem document needs a \"problem\" name");
  OcpProblem p = find_case(doc.at("problem").get<std::string>()).problem;
  if (doc.contains("x0")) p.x0 = vec_from_json(doc.at("x0"));
  if (doc.contains("t0")) p.t0 = doc.at("t0").get<double>();
  if (doc.contains("time")) {
    const auto& t = doc.at("time");
    const std::string mode = t.at("mode").get<std::string>();
    if (mode == "free")
      p.time = TimeMode::free_time();
    else if (mode == "fixed")
      p.time = TimeMode::fixed(t.at("t1").get<double>());
    else
      throw InvalidInput("time mode must be \"free\" or \"fixed\"");
  }
  if (doc.contains("control")) {
    const auto& c = doc.at("control");
    if (c.contains("box")) {
      BoxControlSet box{vec_from_json(c.at("box").at("lo")), vec_from_json(c.at("box").at("hi"))};
      p.control = std::move(box);
    } else if (c.contains("list")) {
      FiniteControlSet fin;
      for (const auto& e : c.at("list")) fin.points.push_back(vec_from_json(e));
      p.control = std::move(fin);
    } else {
      throw InvalidInput("control override needs \"box\" or \"list\"");
    }
  }
  if (doc.contains("target")) {
    const auto& t = doc.at("target");
    const std::string type = t.at("type").get<std::string>();
    if (type == "free") {
      p.target.reset();
    } else if (type == "point") {
      p.target = target_point(vec_from_json(t.at("x")));
    } else if (type == "coordinates") {
      std::vector<int> idx;
      for (const auto& e : t.at("indices")) idx.push_back(e.get<int>());
      Vec values = t.contains("values") ? vec_from_json(t.at("values"))
                                        : Vec(Vec::Zero(static_cast<Eigen::Index>(idx.size())));
      p.target = target_coordinates(idx, values, p.n);
    } else {
      throw InvalidInput("target type must be \"free\", \"point\" or \"coordinates\"");
    }
  }
  if (opts && doc.contains("tolerances")) {
    const auto& t = doc.at("tolerances");
    if (t.contains("tol")) {
      opts->tol = t.at("tol").get<double>();
      if (!(opts->tol > 0)) throw InvalidInput("tolerance must be positive");
    }
    if (t.contains("max_iter")) {
      opts->max_iter = t.at("max_iter").get<int>();
      if (opts->max_iter < 1) throw InvalidInput("max_iter must be at least 1");
    }
  }
  p.validate();
  return p;
}

OcpProblem load_problem_file(const std::string& path, ShootOptions* opts) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("cannot parse problem JSON: ") + e.what());
  }
  return problem_from_json(doc, opts);
}

}  // namespace cpmp
