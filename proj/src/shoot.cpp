#include "cpmp/shoot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "cpmp/errors.hpp"

namespace cpmp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Mat target_jacobian_checked(const OcpProblem& p, const Vec& x1) {
  const Mat D = p.target->Dg(x1);
  Eigen::ColPivHouseholderQR<Mat> qr(D);
  if (qr.rank() < D.rows())
    throw RankDeficient("target Jacobian lost row rank at the terminal state");
  return D;
}

}  // namespace

Vec ShootingUnknowns::pack() const {
  const Eigen::Index nc = costate0.size();
  const Eigen::Index k = c.size();
  Vec z(nc + (t1 ? 1 : 0) + k);
  z.head(nc) = costate0;
  if (t1) z[nc] = *t1;
  if (k > 0) z.tail(k) = c;
  return z;
}

ShootingUnknowns ShootingUnknowns::unpack(const Vec& z, const ShootingUnknowns& like) {
  const Eigen::Index nc = like.costate0.size();
  const Eigen::Index k = like.c.size();
  if (z.size() != nc + (like.t1 ? 1 : 0) + k)
    throw InvalidInput("packed unknown vector has wrong dimension");
  ShootingUnknowns out = like;
  out.costate0 = z.head(nc);
  if (like.t1) out.t1 = z[nc];
  if (k > 0) out.c = z.tail(k);
  return out;
}

ProjectiveCostate ShootingUnknowns::initial_costate() const {
  if (chart.chart == Chart::Normal) return ProjectiveCostate::normal(costate0);
  const int a = chart.pivot;
  Vec alpha(costate0.size() + 1);
  Eigen::Index j = 0;
  for (Eigen::Index i = 0; i < alpha.size(); ++i)
    alpha[i] = (i == a - 1) ? 1.0 : costate0[j++];
  return ProjectiveCostate::abnormal(a, alpha);
}

Vec transversality_residual(const Vec& lambda1, const Vec& x1, const OcpProblem& p,
                            const Vec& c) {
  if (lambda1.size() != p.n || x1.size() != p.n)
    throw InvalidInput("terminal state/costate have wrong dimensions");
  if (!p.target) {
    if (c.size() != 0) throw InvalidInput("multipliers supplied for a free endpoint");
    return lambda1;  // the annihilator of the whole tangent space is {0}
  }
  if (c.size() != p.target->k) throw InvalidInput("multiplier vector has wrong dimension");
  const Mat D = target_jacobian_checked(p, x1);
  return Vec(lambda1 - D.transpose() * c);
}

Vec terminal_cost_transversality_residual(const Vec& mu1, const Vec& x1, const OcpProblem& p,
                                          const Vec& c) {
  if (!p.terminal_cost) throw InvalidInput("problem has no terminal cost");
  return transversality_residual(Vec(mu1 + p.terminal_cost->dK(x1)), x1, p, c);
}

void psi_k(const OcpProblem& p, double y0, const Vec& y, const Vec& mu, double& x0, Vec& x,
           Vec& lambda) {
  x = y;
  if (!p.terminal_cost) {
    x0 = y0;
    lambda = mu;
    return;
  }
  x0 = y0 + p.terminal_cost->K(y);
  lambda = mu + p.terminal_cost->dK(y);
}

void phi_k(const OcpProblem& p, double x0, const Vec& x, double& y0, Vec& y) {
  y = x;
  y0 = p.terminal_cost ? x0 - p.terminal_cost->K(x) : x0;
}

namespace {

void check_unknown_shape(const OcpProblem& p, const ShootingUnknowns& z) {
  if (z.chart.chart == Chart::Normal) {
    if (z.costate0.size() != p.n)
      throw InvalidInput("normal-chart costate guess has wrong dimension");
  } else {
    if (z.chart.pivot < 1 || z.chart.pivot > p.n)
      throw InvalidInput("abnormal pivot out of range");
    if (z.costate0.size() != p.n - 1)
      throw InvalidInput("abnormal-chart costate guess needs n-1 free entries");
  }
  if (p.time.free_terminal && !z.t1)
    throw InvalidInput("free-time problem needs a terminal-time guess");
  if (!p.time.free_terminal && z.t1)
    throw InvalidInput("fixed-time problem must not carry a terminal-time unknown");
  if (z.c.size() != p.target_dim())
    throw InvalidInput("multiplier guess has wrong dimension");
}

// Transversality block at the oriented representative (nu0 <= 0):
// nu1 - nu0 dK(x1) - Dg(x1)^T c.  In the normal chart this is the
// terminal-cost condition mu1 + dK(x1) - Dg^T c; on the abnormal locus the
// terminal cost drops out, matching the cotangent-lift behaviour.
Vec representative_transversality(const OcpProblem& p, const Vec& rep, const Vec& x1,
                                  const Vec& c) {
  Vec lam_eff = rep.tail(p.n);
  if (p.terminal_cost) lam_eff -= rep[0] * p.terminal_cost->dK(x1);
  if (!p.target) return lam_eff;
  const Mat D = target_jacobian_checked(p, x1);
  return Vec(lam_eff - D.transpose() * c);
}

}  // namespace

Vec shooting_residual(const OcpProblem& p, const ShootingUnknowns& z, const ShootOptions& opts,
                      ContactTrajectory* out_traj) {
  check_unknown_shape(p, z);
  const double t1 = p.time.free_terminal ? *z.t1 : p.time.t1;
  if (!(t1 > p.t0)) throw InvalidInput("terminal time must exceed the initial time");
  const ContactHamiltonian H = optimal_hamiltonian(p, opts.maximize);
  const ContactState s0(ExtendedState{0.0, p.x0}, z.initial_costate());
  ContactTrajectory traj = integrate_contact(H, s0, p.t0, t1, opts.integration);
  const ContactSample& end = traj.back();
  const Vec x1 = end.state.xhat.x;
  const Vec rep = representative(end.state.pc);
  const Eigen::Index k = p.target_dim();
  Vec r(k + p.n + (p.time.free_terminal ? 1 : 0));
  if (k > 0) r.head(k) = p.target->g(x1);
  r.segment(k, p.n) = representative_transversality(p, rep, x1, z.c);
  if (p.time.free_terminal) r[k + p.n] = end.h;
  if (out_traj) *out_traj = std::move(traj);
  return r;
}

namespace {

struct ResidualEval {
  Vec r;
  double norm = kInf;
  bool ok = false;
};

ResidualEval try_residual(const OcpProblem& p, const ShootingUnknowns& like, const Vec& z,
                          const ShootOptions& opts) {
  ResidualEval out;
  try {
    out.r = shooting_residual(p, ShootingUnknowns::unpack(z, like), opts);
    if (out.r.allFinite()) {
      out.norm = out.r.lpNorm<Eigen::Infinity>();
      out.ok = true;
    }
  } catch (const Error&) {
    // Probe left the solvable region (chart blow-up, t1 <= t0, ...): treated
    // as infinite residual so the line search backs off.
  }
  return out;
}

ExtremalTrajectory to_extremal(const ContactTrajectory& traj) {
  ExtremalTrajectory out;
  out.samples.reserve(traj.samples.size());
  for (const ContactSample& s : traj.samples)
    out.samples.push_back(ExtremalSample{s.t, s.state.xhat, s.state.pc, s.u, s.h});
  out.control_switch_times = traj.control_switch_times;
  out.chart_switch_times = traj.chart_switch_times;
  return out;
}

bool stayed_abnormal(const ContactTrajectory& traj) {
  for (const ContactSample& s : traj.samples)
    if (s.state.pc.is_normal() || s.state.pc.alpha0() != 0.0) return false;
  return true;
}

ShootingResult solve_single(const OcpProblem& p, const ShootingUnknowns& z0,
                            const ShootOptions& opts) {
  ShootingResult res;
  const ShootingUnknowns like = z0;
  Vec z = z0.pack();
  ResidualEval cur = try_residual(p, like, z, opts);
  if (!cur.ok) {
    res.residual_norm = kInf;
    res.residual_history.push_back(kInf);
    res.unknowns = z0;
    return res;
  }
  res.residual_history.push_back(cur.norm);
  int it = 0;
  for (; it < opts.max_iter && cur.norm > opts.tol; ++it) {
    const Eigen::Index dim = z.size();
    Mat J(cur.r.size(), dim);
    bool jac_ok = true;
    for (Eigen::Index j = 0; j < dim; ++j) {
      double step = opts.fd_step * std::max(1.0, std::abs(z[j]));
      Vec zp = z;
      zp[j] += step;
      ResidualEval pe = try_residual(p, like, zp, opts);
      if (!pe.ok) {  // forward probe failed: difference backward instead
        zp[j] = z[j] - step;
        step = -step;
        pe = try_residual(p, like, zp, opts);
      }
      if (!pe.ok) {
        jac_ok = false;
        break;
      }
      J.col(j) = (pe.r - cur.r) / step;
    }
    if (!jac_ok) break;
    const Vec dz = Eigen::CompleteOrthogonalDecomposition<Mat>(J).solve(-cur.r);
    if (!dz.allFinite() || dz.lpNorm<Eigen::Infinity>() == 0.0) break;
    // Backtracking line search on the residual sup-norm.
    bool accepted = false;
    double alpha = 1.0;
    ResidualEval nxt;
    for (int hh = 0; hh <= opts.max_halvings; ++hh, alpha *= 0.5) {
      nxt = try_residual(p, like, Vec(z + alpha * dz), opts);
      if (nxt.ok && nxt.norm < cur.norm * (1.0 - 1e-4 * alpha)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // stalled
    z += alpha * dz;
    cur = nxt;
    res.residual_history.push_back(cur.norm);
  }
  res.iterations = it;
  res.unknowns = ShootingUnknowns::unpack(z, like);
  res.converged = cur.ok && cur.norm <= opts.tol;
  res.residual = cur.r;
  res.residual_norm = cur.norm;
  if (!res.converged) return res;

  ContactTrajectory traj;
  res.residual = shooting_residual(p, res.unknowns, opts, &traj);
  res.residual_norm = res.residual.lpNorm<Eigen::Infinity>();
  const ContactSample& end = traj.back();
  res.t1 = end.t;
  res.cost =
      end.state.xhat.x0 + (p.terminal_cost ? p.terminal_cost->K(end.state.xhat.x) : 0.0);
  res.trajectory = to_extremal(traj);
  const Eigen::Index k = p.target_dim();
  res.residual_blocks["target"] = k > 0 ? res.residual.head(k).lpNorm<Eigen::Infinity>() : 0.0;
  res.residual_blocks["transversality"] =
      res.residual.segment(k, p.n).lpNorm<Eigen::Infinity>();
  if (p.time.free_terminal) res.residual_blocks["free_time"] = std::abs(res.residual[k + p.n]);
  res.classification =
      (z0.chart.chart == Chart::Abnormal && stayed_abnormal(traj)) ? "abnormal" : "normal";
  return res;
}

SolveAttempt summarize(const ShootingUnknowns& start, const ShootingResult& r) {
  SolveAttempt a;
  a.start = start.pack();
  a.converged = r.converged;
  a.cost = r.cost;
  a.t1 = r.t1;
  a.residual_norm = r.residual_norm;
  a.iterations = r.iterations;
  return a;
}

}  // namespace

ShootingResult solve(const OcpProblem& p, const ShootingUnknowns& z_init,
                     const ShootOptions& opts) {
  p.validate();
  check_unknown_shape(p, z_init);

  std::vector<ShootingUnknowns> starts{z_init};
  if (!opts.start_grid.empty()) {
    for (const Vec& v : opts.start_grid) {
      ShootingUnknowns z = z_init;
      if (v.size() != z.costate0.size())
        throw InvalidInput("multi-start costate has wrong dimension");
      z.costate0 = v;
      starts.push_back(z);
    }
  } else if (opts.multistart > 0) {
    Rng rng(opts.seed);
    for (int i = 0; i < opts.multistart; ++i) {
      ShootingUnknowns z = z_init;
      z.costate0 = rng.uniform_vec(z.costate0.size(), -2.0, 2.0);
      starts.push_back(z);
    }
  }

  // Chart plan: honor the requested policy; Auto retries abnormal pivots only
  // after every normal-chart start has failed (the generic case is normal).
  std::vector<ShootingUnknowns> fallback;
  if (opts.chart_policy == ShootOptions::ChartPolicy::Auto &&
      z_init.chart.chart == Chart::Normal) {
    for (int a = 1; a <= p.n; ++a) {
      ShootingUnknowns z = z_init;
      z.chart = ChartTarget::abnormal(a);
      z.costate0 = Vec::Zero(p.n - 1);
      fallback.push_back(z);
    }
  }
  if (opts.chart_policy == ShootOptions::ChartPolicy::AbnormalOnly &&
      z_init.chart.chart == Chart::Normal) {
    starts.clear();
    for (int a = 1; a <= p.n; ++a) {
      ShootingUnknowns z = z_init;
      z.chart = ChartTarget::abnormal(a);
      z.costate0 = Vec::Zero(p.n - 1);
      starts.push_back(z);
    }
  }

  std::vector<SolveAttempt> attempts;
  std::optional<ShootingResult> best;
  std::optional<ShootingResult> best_failed;
  auto consider = [&](const ShootingUnknowns& z) {
    ShootingResult r = solve_single(p, z, opts);
    attempts.push_back(summarize(z, r));
    if (r.converged) {
      if (!best || r.cost < best->cost) best = std::move(r);
    } else if (!best_failed || r.residual_norm < best_failed->residual_norm) {
      best_failed = std::move(r);
    }
  };
  for (const auto& z : starts) consider(z);
  if (!best)
    for (const auto& z : fallback) consider(z);

  if (!best) {
    std::ostringstream os;
    os << "shooting failed to converge after " << attempts.size()
       << " attempt(s); best residual sup-norm "
       << (best_failed ? best_failed->residual_norm : kInf) << " in "
       << (best_failed ? best_failed->iterations : 0) << " iterations; history:";
    if (best_failed)
      for (double v : best_failed->residual_history) os << " " << v;
    throw NoConvergence(os.str());
  }
  best->attempts = std::move(attempts);
  return *best;
}

std::map<std::string, double> verify_extremal(const OcpProblem& p, const ShootingResult& result,
                                              const ShootOptions& opts) {
  if (!result.converged) throw InvalidInput("diagnostics require a converged result");
  const auto& samples = result.trajectory.samples;
  if (samples.size() < 2) throw InvalidInput("trajectory too short for diagnostics");
  std::map<std::string, double> out;

  // Maximum-principle defect: grid maximum of the pre-maximization
  // Hamiltonian must not beat the recorded maximized value anywhere.
  const auto grid = control_grid(p.control, opts.maximize.grid_points);
  double mp = 0.0;
  for (const auto& s : samples) {
    const Vec rep = representative(s.pc);
    double bestv = -kInf;
    for (const Vec& u : grid) {
      const double v = rep[0] * p.L(s.xhat.x, u) + rep.tail(p.n).dot(p.f(s.xhat.x, u));
      if (std::isfinite(v)) bestv = std::max(bestv, v);
    }
    mp = std::max(mp, bestv - s.h);
  }
  out["max_principle_defect"] = std::max(0.0, mp);

  // Pairing conservation between the adjoint flow and a basis of tangent
  // flows.  Both are propagated along one self-consistent replay of the
  // sampled control, so the forward and backward coefficient paths agree
  // (the raw samples would not: their control varies inside each step).
  const ControlSignal us = to_control_signal(result.trajectory);
  const StateTrajectory replay =
      integrate_extended(p, us, samples.front().t, samples.back().t, samples.front().xhat.x,
                         opts.integration.ode);
  const Vec nu1 = representative(samples.back().pc);
  const StateTrajectory adj = propagate_adjoint(p, replay, us, nu1);
  double pd = 0.0;
  for (Eigen::Index i = 0; i <= p.n; ++i) {
    Vec e = Vec::Zero(p.n + 1);
    e[i] = 1.0;
    pd = std::max(pd, pairing_defect(adj, propagate_tangent(p, replay, us, e)));
  }
  out["pairing_defect"] = pd;

  double max_nu0 = -kInf;
  double drift = 0.0;
  const double h1 = samples.back().h;
  for (const auto& s : samples) {
    max_nu0 = std::max(max_nu0, representative(s.pc)[0]);
    drift = std::max(drift, std::abs(s.h - h1));
  }
  out["max_nu0"] = max_nu0;
  out["hamiltonian_drift"] = drift;

  const Vec rep1 = representative(samples.back().pc);
  out["transversality_defect"] =
      representative_transversality(p, rep1, samples.back().xhat.x, result.unknowns.c)
          .lpNorm<Eigen::Infinity>();
  if (p.time.free_terminal) out["terminal_h"] = std::abs(h1);
  return out;
}

}  // namespace cpmp
