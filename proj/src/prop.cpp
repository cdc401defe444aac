#include "cpmp/prop.hpp"

#include <algorithm>
#include <cmath>

#include "cpmp/errors.hpp"

namespace cpmp {

ControlSignal ControlSignal::constant(const Vec& u) {
  ControlSignal s;
  s.fn_ = [u](double) { return u; };
  return s;
}

ControlSignal ControlSignal::from_function(std::function<Vec(double)> u) {
  if (!u) throw InvalidInput("control signal evaluator is empty");
  ControlSignal s;
  s.fn_ = std::move(u);
  return s;
}

ControlSignal ControlSignal::piecewise_constant(std::vector<double> breakpoints,
                                                std::vector<Vec> values) {
  if (breakpoints.size() < 2 || values.size() + 1 != breakpoints.size())
    throw InvalidInput("piecewise signal needs N+1 breakpoints for N segment values");
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
    if (!(breakpoints[i] < breakpoints[i + 1]))
      throw InvalidInput("control breakpoints must be strictly increasing");
  ControlSignal s;
  s.times_ = std::move(breakpoints);
  s.values_ = std::move(values);
  return s;
}

Vec ControlSignal::eval(double t) const {
  if (!is_piecewise()) return fn_(t);
  if (t <= times_.front()) return values_.front();
  if (t >= times_.back()) return values_.back();
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const auto seg = static_cast<std::size_t>(it - times_.begin()) - 1;
  return values_[std::min(seg, values_.size() - 1)];
}

Vec StateTrajectory::at(double time) const {
  if (t.empty()) throw InvalidInput("cannot interpolate an empty trajectory");
  if (time <= t.front()) return y.front();
  if (time >= t.back()) return y.back();
  const auto it = std::upper_bound(t.begin(), t.end(), time);
  const auto i = static_cast<std::size_t>(it - t.begin()) - 1;
  const double h = t[i + 1] - t[i];
  if (h <= 0.0) return y[i + 1];
  const double w = (time - t[i]) / h;
  return (1.0 - w) * y[i] + w * y[i + 1];
}

namespace {

// Segment boundaries of [ta, tb] split at the signal's interior breakpoints.
std::vector<double> segment_edges(const ControlSignal& u, double ta, double tb) {
  std::vector<double> edges{ta};
  for (double bp : u.breakpoints())
    if (bp > ta + 1e-15 * std::max(1.0, std::abs(ta)) &&
        bp < tb - 1e-15 * std::max(1.0, std::abs(tb)))
      edges.push_back(bp);
  edges.push_back(tb);
  return edges;
}

// Value used for the whole RK4 step [sa, sb]: piecewise signals are frozen at
// the segment midpoint (steps never straddle a breakpoint), closed forms are
// sampled at the requested time.
Vec step_control(const ControlSignal& u, double sa, double sb, double stage_t) {
  return u.is_piecewise() ? u.eval(0.5 * (sa + sb)) : u.eval(stage_t);
}

}  // namespace

StateTrajectory integrate_extended(const OcpProblem& p, const ControlSignal& u, double ta,
                                   double tb, const Vec& x_start, const OdeOptions& opts) {
  if (!(tb > ta)) throw InvalidInput("integration span must have tb > ta");
  if (x_start.size() != p.n) throw InvalidInput("start state has wrong dimension");
  Vec y(p.n + 1);
  y[0] = 0.0;
  y.tail(p.n) = x_start;
  StateTrajectory out;
  out.t.push_back(ta);
  out.y.push_back(y);
  const auto edges = segment_edges(u, ta, tb);
  for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
    const double sa = edges[s], sb = edges[s + 1];
    if (u.is_piecewise()) require_in_control_set(p.control, u.eval(0.5 * (sa + sb)));
    auto field = [&](double t, const Vec& yy) {
      const Vec uu = step_control(u, sa, sb, t);
      Vec dy(p.n + 1);
      dy[0] = p.L(yy.tail(p.n), uu);
      dy.tail(p.n) = p.f(yy.tail(p.n), uu);
      return dy;
    };
    rk4_span(field, sa, sb, opts.step, y, [&](double t, const Vec& yy) {
      out.t.push_back(t);
      out.y.push_back(yy);
    });
  }
  return out;
}

StateTrajectory integrate_extended(const OcpProblem& p, const ControlSignal& u, double ta,
                                   double tb, const OdeOptions& opts) {
  return integrate_extended(p, u, ta, tb, p.x0, opts);
}

StateTrajectory propagate_adjoint(const OcpProblem& p, const StateTrajectory& traj,
                                  const ControlSignal& u, const Vec& nu1) {
  if (traj.size() < 2) throw InvalidInput("state trajectory needs at least two samples");
  if (nu1.size() != p.n + 1) throw InvalidInput("terminal costate has wrong dimension");
  if (nu1.lpNorm<Eigen::Infinity>() == 0.0) throw ZeroCostate("terminal costate is zero");
  const std::size_t N = traj.size() - 1;
  StateTrajectory out;
  out.t = traj.t;
  out.y.assign(traj.size(), Vec());
  out.y[N] = nu1;
  // Augmented sweep variable [x; nu] so the Jacobians are evaluated at
  // stage-consistent states of one backward RK4 run.
  Vec w(2 * p.n + 1);
  w.head(p.n) = traj.y[N].tail(p.n);
  w.tail(p.n + 1) = nu1;
  for (std::size_t i = N; i-- > 0;) {
    const double t_hi = traj.t[i + 1], t_lo = traj.t[i];
    auto field = [&](double t, const Vec& v) {
      const Vec uu = step_control(u, t_lo, t_hi, t);
      const Vec x = v.head(p.n);
      const Vec nu = v.tail(p.n);
      Vec dv(2 * p.n + 1);
      dv.head(p.n) = p.f(x, uu);
      dv[p.n] = 0.0;  // the multiplier of the cost slot is a strict invariant
      dv.tail(p.n) = -(p.jac_f_x(x, uu).transpose() * nu) - v[p.n] * p.grad_L_x(x, uu);
      return dv;
    };
    w = rk4_step(field, t_hi, w, t_lo - t_hi);
    if (!w.allFinite()) throw StepFailure("non-finite costate during adjoint integration");
    out.y[i] = w.tail(p.n + 1);
  }
  return out;
}

StateTrajectory propagate_tangent(const OcpProblem& p, const StateTrajectory& traj,
                                  const ControlSignal& u, const Vec& dxhat0) {
  if (traj.size() < 2) throw InvalidInput("state trajectory needs at least two samples");
  if (dxhat0.size() != p.n + 1) throw InvalidInput("initial tangent has wrong dimension");
  StateTrajectory out;
  out.t = traj.t;
  out.y.assign(traj.size(), Vec());
  out.y[0] = dxhat0;
  // Augmented sweep variable [x; dxhat]: the x block repeats the forward
  // state integration bitwise, keeping the variational Jacobians at the
  // RK4 stage states.
  Vec w(2 * p.n + 1);
  w.head(p.n) = traj.y[0].tail(p.n);
  w.tail(p.n + 1) = dxhat0;
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    const double t_lo = traj.t[i], t_hi = traj.t[i + 1];
    auto field = [&](double t, const Vec& v) {
      const Vec uu = step_control(u, t_lo, t_hi, t);
      const Vec x = v.head(p.n);
      const Vec dx = v.tail(p.n);
      Vec dv(2 * p.n + 1);
      dv.head(p.n) = p.f(x, uu);
      dv[p.n] = p.grad_L_x(x, uu).dot(dx);  // cost-slot column of Dfhat is zero
      dv.tail(p.n) = p.jac_f_x(x, uu) * dx;
      return dv;
    };
    w = rk4_step(field, t_lo, w, t_hi - t_lo);
    if (!w.allFinite()) throw StepFailure("non-finite tangent during variational integration");
    out.y[i + 1] = w.tail(p.n + 1);
  }
  return out;
}

double pairing_defect(const StateTrajectory& costates, const StateTrajectory& tangents) {
  if (costates.size() != tangents.size() || costates.size() == 0)
    throw GridMismatch("costate and tangent series have different lengths");
  for (std::size_t i = 0; i < costates.size(); ++i) {
    if (std::abs(costates.t[i] - tangents.t[i]) >
        1e-12 * std::max(1.0, std::abs(costates.t[i])))
      throw GridMismatch("costate and tangent series use different time grids");
  }
  const double ref = costates.y.back().dot(tangents.y.back());
  double defect = 0.0;
  for (std::size_t i = 0; i < costates.size(); ++i)
    defect = std::max(defect, std::abs(costates.y[i].dot(tangents.y[i]) - ref));
  return defect;
}

ControlSignal to_control_signal(const ExtremalTrajectory& traj) {
  if (traj.samples.size() < 2) throw InvalidInput("extremal trajectory needs two samples");
  std::vector<double> times;
  std::vector<Vec> values;
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const double t = traj.samples[i].t;
    if (!times.empty() && !(t > times.back())) {
      // Duplicate node (switch record): keep the post-switch control.
      if (!values.empty()) values.back() = traj.samples[i].u;
      continue;
    }
    times.push_back(t);
    if (i + 1 < traj.samples.size()) values.push_back(traj.samples[i].u);
  }
  if (times.size() < 2) throw InvalidInput("extremal trajectory spans zero time");
  values.resize(times.size() - 1, values.empty() ? traj.samples.front().u : values.back());
  return ControlSignal::piecewise_constant(std::move(times), std::move(values));
}

}  // namespace cpmp
