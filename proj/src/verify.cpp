#include "cpmp/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "cpmp/contact.hpp"
#include "cpmp/errors.hpp"
#include "cpmp/ocp.hpp"
#include "cpmp/ode.hpp"
#include "cpmp/prop.hpp"
#include "cpmp/shoot.hpp"

namespace cpmp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

CheckResult upper(const std::string& name, double measured, double bound) {
  return CheckResult{name, measured, bound, true, measured <= bound};
}

CheckResult lower(const std::string& name, double measured, double bound) {
  return CheckResult{name, measured, bound, false, measured >= bound};
}

// Random smooth problem used by the homogeneity sweep.
OcpProblem random_problem(Rng& rng) {
  OcpProblem p;
  p.name = "random";
  p.n = 1 + rng.index(4);
  p.m = 1 + rng.index(2);
  const Mat A = Mat::NullaryExpr(p.n, p.n, [&](Eigen::Index, Eigen::Index) { return rng.normal(); });
  const Mat B = Mat::NullaryExpr(p.n, p.m, [&](Eigen::Index, Eigen::Index) { return rng.normal(); });
  p.f = [A, B](const Vec& x, const Vec& u) {
    return Vec(A * x.array().tanh().matrix() + B * u);
  };
  p.L = [](const Vec& x, const Vec& u) {
    return 0.5 * x.squaredNorm() + 0.25 * u.squaredNorm() + std::sin(x[0]);
  };
  p.control = BoxControlSet{Vec::Constant(p.m, -2.0), Vec::Constant(p.m, 2.0)};
  p.x0 = rng.normal_vec(p.n);
  return p;
}

Mat random_matrix_fro(Rng& rng, Eigen::Index rows, Eigen::Index cols, double fro) {
  Mat A = Mat::NullaryExpr(rows, cols, [&](Eigen::Index, Eigen::Index) { return rng.normal(); });
  const double norm = A.norm();
  if (norm > 0) A *= fro / norm;
  return A;
}

}  // namespace

CheckResult check_homogeneity(int trials, unsigned seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const OcpProblem p = random_problem(rng);
    const ExtendedState xhat{rng.normal(), rng.normal_vec(p.n)};
    const Vec nuhat = 2.0 * rng.normal_vec(p.n + 1);
    const Vec u = rng.uniform_vec(p.m, -2.0, 2.0);
    double k = rng.uniform(-3.0, 3.0);
    if (std::abs(k) < 0.1) k = 0.5;  // keep the scaling bounded away from zero
    const double h1 = control_hamiltonian(p, xhat, nuhat, u);
    const double hk = control_hamiltonian(p, xhat, Vec(k * nuhat), u);
    worst = std::max(worst, std::abs(hk - k * h1) / (1.0 + std::abs(h1)));
  }
  return upper("homogeneity_defect", worst, 1e-12);
}

std::vector<CheckResult> check_pairing(int systems, double step, unsigned seed) {
  Rng rng(seed);
  double worst_d1 = 0.0;
  double worst_d2 = 0.0;
  for (int sys = 0; sys < systems; ++sys) {
    OcpProblem p;
    p.name = "pairing_probe";
    p.n = 2 + rng.index(3);
    p.m = 1;
    const Mat A = random_matrix_fro(rng, p.n, p.n, 3.5);
    Mat Q = random_matrix_fro(rng, p.n, p.n, 3.0);
    Q = 0.5 * (Q + Q.transpose()).eval();
    const Vec B = rng.normal_vec(p.n);
    p.f = [A, B](const Vec& x, const Vec& u) { return Vec(A * x + B * u[0]); };
    p.L = [Q](const Vec& x, const Vec&) { return 0.5 * x.dot(Q * x); };
    p.dfdx = [A](const Vec&, const Vec&) { return A; };
    p.dLdx = [Q](const Vec& x, const Vec&) { return Vec(Q * x); };
    p.control = BoxControlSet{Vec::Constant(1, -1.0), Vec::Constant(1, 1.0)};
    p.x0 = rng.normal_vec(p.n).normalized();
    const ControlSignal u = ControlSignal::constant(Vec::Constant(1, rng.uniform(-1.0, 1.0)));
    const Vec nu1 = rng.normal_vec(p.n + 1).normalized();
    const Vec dx0 = rng.normal_vec(p.n + 1).normalized();
    auto defect_at = [&](double h) {
      OdeOptions ode;
      ode.step = h;
      const StateTrajectory traj = integrate_extended(p, u, 0.0, 1.0, ode);
      return pairing_defect(propagate_adjoint(p, traj, u, nu1),
                            propagate_tangent(p, traj, u, dx0));
    };
    worst_d1 = std::max(worst_d1, defect_at(step));
    worst_d2 = std::max(worst_d2, defect_at(0.5 * step));
  }
  // The ensemble defect is the max over systems (same statistic the bound
  // clause uses); its decay under halving shows the integrator's order.
  // Per-system ratios are unusable for the most conservative draws, whose
  // defect sits at the rounding floor already at the base step.
  return {upper("pairing_defect", worst_d1, 1e-6),
          lower("pairing_halving_ratio", worst_d1 / std::max(worst_d2, 1e-300), 8.0)};
}

std::vector<CheckResult> check_chart_atlas(int trials, unsigned seed) {
  Rng rng(seed);
  double worst_round = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const Eigen::Index n = 1 + rng.index(4);
    Vec nu = rng.normal_vec(n + 1);
    if (trial % 2 == 1) nu[0] = 0.0;  // exercise the abnormal locus exactly
    if (nu.lpNorm<Eigen::Infinity>() == 0.0) nu[1] = 1.0;
    const ProjectiveCostate pc = from_vector(nu);
    const Vec rep = representative(pc);
    // Hop to another chart (largest usable pivot) and back.
    int pivot = 0;
    double best = 0.0;
    for (Eigen::Index i = 1; i <= n; ++i) {
      if (pc.chart() == Chart::Abnormal && static_cast<int>(i) == pc.pivot()) continue;
      if (std::abs(rep[i]) > best) {
        best = std::abs(rep[i]);
        pivot = static_cast<int>(i);
      }
    }
    if (pivot == 0) continue;  // costate concentrated on the current pivot
    const ProjectiveCostate hop = switch_chart(pc, ChartTarget::abnormal(pivot));
    const ProjectiveCostate back =
        pc.chart() == Chart::Normal
            ? switch_chart(hop, ChartTarget::normal())
            : switch_chart(hop, ChartTarget::abnormal(pc.pivot()));
    worst_round = std::max(worst_round, projective_distance(pc, back));
  }

  // Flow that crosses the abnormal locus: H = nu0 x1 + nu1 x0 drives nu0
  // through zero while nu1 stays away from it, forcing automatic switches
  // normal -> abnormal -> normal.
  auto H = std::make_shared<HomogeneousHamiltonian>();
  H->value = [](const Vec& xhat, const Vec& nuhat) {
    return nuhat[0] * xhat[1] + nuhat[1] * xhat[0];
  };
  H->d_xhat = [](const Vec&, const Vec& nuhat) {
    Vec g(2);
    g << nuhat[1], nuhat[0];
    return g;
  };
  H->d_nuhat = [](const Vec& xhat, const Vec&) {
    Vec g(2);
    g << xhat[1], xhat[0];
    return g;
  };
  const ContactHamiltonian h = chart_hamiltonian(H);
  Vec nu0(2);
  nu0 << -0.5, -1.0;
  const ContactState s0(ExtendedState{0.3, Vec::Constant(1, 0.7)}, from_vector(nu0));
  ContactIntegrationOptions opts;
  opts.ode.step = 1e-3;
  const ContactTrajectory traj = integrate_contact(h, s0, 0.0, 1.2, opts);
  double worst_jump = traj.chart_switch_times.empty() ? kInf : 0.0;
  for (std::size_t i = 1; i < traj.samples.size(); ++i) {
    if (traj.samples[i].t != traj.samples[i - 1].t) continue;
    worst_jump = std::max(
        worst_jump, projective_distance(traj.samples[i - 1].state.pc, traj.samples[i].state.pc));
  }
  return {upper("chart_round_trip", worst_round, 1e-14),
          upper("chart_switch_continuity", worst_jump, 1e-9)};
}

CheckResult check_contact_symplectic(int problems, int abnormal_runs, unsigned seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int run = 0; run < problems; ++run) {
    const Eigen::Index n = 1 + rng.index(3);
    const Mat M = random_matrix_fro(rng, n + 1, n + 1, 2.0);
    const Vec b = 0.5 * rng.normal_vec(n + 1);
    auto H = std::make_shared<HomogeneousHamiltonian>();
    H->value = [M, b](const Vec& xhat, const Vec& nuhat) {
      return nuhat.dot(M * xhat.array().tanh().matrix() + b);
    };
    H->d_xhat = [M](const Vec& xhat, const Vec& nuhat) {
      const Vec sech2 = 1.0 - xhat.array().tanh().square();
      return Vec((M.transpose() * nuhat).cwiseProduct(sech2));
    };
    H->d_nuhat = [M, b](const Vec& xhat, const Vec&) {
      return Vec(M * xhat.array().tanh().matrix() + b);
    };

    const Vec xhat0 = rng.normal_vec(n + 1);
    Vec nuhat0 = rng.normal_vec(n + 1);
    if (run < abnormal_runs) nuhat0[0] = 0.0;  // start exactly on the abnormal locus
    if (nuhat0.lpNorm<Eigen::Infinity>() == 0.0) nuhat0[1] = 1.0;

    const ContactHamiltonian h = chart_hamiltonian(H);
    ContactIntegrationOptions opts;
    opts.ode.step = 1e-3;
    const ContactState s0(ExtendedState{xhat0[0], xhat0.tail(n)}, from_vector(nuhat0));
    const ContactTrajectory traj = integrate_contact(h, s0, 0.0, 1.0, opts);

    // Reference: the symplectic flow of the lift, integrated adaptively and
    // projectivized at every contact sample time.
    Vec z(2 * (n + 1));
    z.head(n + 1) = xhat0;
    z.tail(n + 1) = representative(s0.pc);
    auto field = [&](double, const Vec& y) {
      Vec dx, dn;
      symplectic_lift_field(*H, y.head(n + 1), y.tail(n + 1), dx, dn);
      Vec dy(2 * (n + 1));
      dy << dx, dn;
      return dy;
    };
    double t = traj.samples.front().t;
    for (const ContactSample& s : traj.samples) {
      if (s.t > t) rk45_span(field, t, s.t, 1e-11, 1e-13, z, {});
      t = s.t;
      const double dx = (s.state.xhat.flat() - z.head(n + 1)).lpNorm<Eigen::Infinity>();
      const double dp = projective_distance(s.state.pc, from_vector(Vec(z.tail(n + 1))));
      worst = std::max(worst, std::max(dx, dp));
    }
  }
  return upper("contact_symplectic_defect", worst, 1e-6);
}

CheckResult check_psi_roundtrip(int trials, unsigned seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const Eigen::Index n = 1 + rng.index(4);
    Mat P = Mat::NullaryExpr(n, n, [&](Eigen::Index, Eigen::Index) { return rng.normal(); });
    P = 0.5 * (P + P.transpose()).eval();
    const Vec q = rng.normal_vec(n);
    OcpProblem plus;
    plus.n = n;
    TerminalCost tc;
    tc.K = [P, q](const Vec& x) { return 0.5 * x.dot(P * x) + q.dot(x); };
    tc.dK = [P, q](const Vec& x) { return Vec(P * x + q); };
    plus.terminal_cost = tc;
    OcpProblem minus;
    minus.n = n;
    TerminalCost tm;
    tm.K = [tc](const Vec& x) { return -tc.K(x); };
    tm.dK = [tc](const Vec& x) { return Vec(-tc.dK(x)); };
    minus.terminal_cost = tm;

    const double y0 = rng.normal();
    const Vec y = rng.normal_vec(n);
    const Vec mu = rng.normal_vec(n);
    double a0, b0;
    Vec a, am, b, bm;
    psi_k(minus, y0, y, mu, a0, a, am);   // apply the inverse-direction map first
    psi_k(plus, a0, a, am, b0, b, bm);    // then the forward map
    worst = std::max({worst, std::abs(b0 - y0), (b - y).lpNorm<Eigen::Infinity>(),
                      (bm - mu).lpNorm<Eigen::Infinity>()});
  }
  return upper("psi_round_trip", worst, 1e-14);
}

std::vector<std::string> verify_suites() {
  return {"homogeneity", "pairing", "chart", "contact_symplectic", "psi_k"};
}

std::vector<CheckResult> verify_suite(const std::string& name) {
  if (name == "homogeneity") return {check_homogeneity(1000, 12345)};
  if (name == "pairing") return check_pairing(100, 1e-3, 777);
  if (name == "chart") return check_chart_atlas(1000, 99);
  if (name == "contact_symplectic") return {check_contact_symplectic(50, 5, 2024)};
  if (name == "psi_k") return {check_psi_roundtrip(1000, 5)};
  if (name == "all") {
    std::vector<CheckResult> out;
    for (const auto& suite : verify_suites()) {
      auto part = verify_suite(suite);
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }
  throw InvalidInput("unknown verify suite: " + name);
}

}  // namespace cpmp
