#include "cpmp/contact.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "cpmp/ode_detail.hpp"

namespace cpmp {

double HomogeneousHamiltonian::eval(const Vec& xhat, const Vec& nuhat) const {
  return value(xhat, nuhat);
}

Vec HomogeneousHamiltonian::grad_xhat(const Vec& xhat, const Vec& nuhat) const {
  if (d_xhat) return d_xhat(xhat, nuhat);
  return central_gradient([&](const Vec& q) { return value(q, nuhat); }, xhat);
}

Vec HomogeneousHamiltonian::grad_nuhat(const Vec& xhat, const Vec& nuhat) const {
  if (d_nuhat) return d_nuhat(xhat, nuhat);
  return central_gradient([&](const Vec& q) { return value(xhat, q); }, nuhat);
}

double ContactHamiltonian::eval(const ContactState& s) const {
  if (s.pc.is_normal()) return value(s.xhat.x0, s.xhat.x, s.pc.coords());
  if (!homogeneous)
    throw ChartSingularity("abnormal-chart evaluation requires a homogeneous extension");
  return homogeneous->eval(s.xhat.flat(), representative(s.pc));
}

ContactHamiltonian::Partials ContactHamiltonian::partials_normal(double x0, const Vec& x,
                                                                 const Vec& lambda) const {
  Partials p;
  p.x0 = d_x0 ? d_x0(x0, x, lambda)
              : central_partial([&](double c) { return value(c, x, lambda); }, x0);
  p.x = d_x ? d_x(x0, x, lambda)
            : central_gradient([&](const Vec& q) { return value(x0, q, lambda); }, x);
  p.lambda = d_lambda
                 ? d_lambda(x0, x, lambda)
                 : central_gradient([&](const Vec& q) { return value(x0, x, q); }, lambda);
  return p;
}

double contact_form(const ContactState& s, const ContactTangent& w) {
  if (!s.pc.is_normal())
    throw ChartSingularity("the contact form is expressed in the normal chart");
  return -w.dx0 + s.pc.coords().dot(w.dx);
}

double two_form(const ContactTangent& v, const ContactTangent& w) {
  return v.dx.dot(w.dc) - v.dc.dot(w.dx);
}

ContactTangent reeb_field(Eigen::Index n) {
  ContactTangent r;
  r.dx0 = -1.0;
  r.dx = Vec::Zero(n);
  r.dc = Vec::Zero(n);
  return r;
}

ContactTangent contact_vector_field(const ContactHamiltonian& h, const ContactState& s) {
  if (!s.pc.is_normal())
    throw ChartSingularity("contact_vector_field expects a normal-chart state");
  const Vec& lambda = s.pc.coords();
  const auto p = h.partials_normal(s.xhat.x0, s.xhat.x, lambda);
  const double hv = h.value(s.xhat.x0, s.xhat.x, lambda);
  ContactTangent out;
  out.dx = p.lambda;
  out.dc = -p.x - p.x0 * lambda;
  out.dx0 = lambda.dot(p.lambda) - hv;
  return out;
}

ContactTangent contact_vector_field_abnormal(const ContactHamiltonian& h,
                                             const ContactState& s) {
  if (s.pc.is_normal())
    throw ChartSingularity("contact_vector_field_abnormal expects an abnormal-chart state");
  if (!h.homogeneous)
    throw ChartSingularity("abnormal-chart flow requires a homogeneous extension");
  const Eigen::Index n = s.n();
  const int a = s.pc.pivot();
  const Vec rep = representative(s.pc);
  const Vec xflat = s.xhat.flat();
  const Vec gx = h.homogeneous->grad_xhat(xflat, rep);
  const Vec gv = h.homogeneous->grad_nuhat(xflat, rep);
  const Vec nu_dot = -gx;              // full adjoint rate at the representative
  const double piv_val = rep[a];       // +-1 after orientation
  const double piv_rate = nu_dot[a];
  ContactTangent out;
  out.dx0 = gv[0];
  out.dx = gv.tail(n);
  out.dc = Vec(n);
  const Vec& alpha = s.pc.coords();
  for (Eigen::Index i = 0; i < n; ++i)
    out.dc[i] = (nu_dot[i + 1] - alpha[i] * piv_rate) / piv_val;
  out.dc[a - 1] = 0.0;  // pivot coordinate is pinned to 1
  out.dalpha0 = (nu_dot[0] - s.pc.alpha0() * piv_rate) / piv_val;
  return out;
}

void symplectic_lift_field(const HomogeneousHamiltonian& H, const Vec& xhat, const Vec& nuhat,
                           Vec& dxhat, Vec& dnuhat) {
  dxhat = H.grad_nuhat(xhat, nuhat);
  dnuhat = -H.grad_xhat(xhat, nuhat);
}

ContactHamiltonian chart_hamiltonian(std::shared_ptr<const HomogeneousHamiltonian> H) {
  if (!H || !H->value) throw InvalidInput("homogeneous Hamiltonian has no evaluator");
  auto pack = [](double x0, const Vec& x, const Vec& lambda, Vec& xhat, Vec& nuhat) {
    xhat.resize(x.size() + 1);
    xhat[0] = x0;
    xhat.tail(x.size()) = x;
    nuhat.resize(lambda.size() + 1);
    nuhat[0] = -1.0;
    nuhat.tail(lambda.size()) = lambda;
  };
  ContactHamiltonian h;
  h.value = [H, pack](double x0, const Vec& x, const Vec& lambda) {
    Vec xhat, nuhat;
    pack(x0, x, lambda, xhat, nuhat);
    return H->eval(xhat, nuhat);
  };
  h.d_x0 = [H, pack](double x0, const Vec& x, const Vec& lambda) {
    Vec xhat, nuhat;
    pack(x0, x, lambda, xhat, nuhat);
    return H->grad_xhat(xhat, nuhat)[0];
  };
  h.d_x = [H, pack](double x0, const Vec& x, const Vec& lambda) {
    Vec xhat, nuhat;
    pack(x0, x, lambda, xhat, nuhat);
    return Vec(H->grad_xhat(xhat, nuhat).tail(x.size()));
  };
  h.d_lambda = [H, pack](double x0, const Vec& x, const Vec& lambda) {
    Vec xhat, nuhat;
    pack(x0, x, lambda, xhat, nuhat);
    return Vec(H->grad_nuhat(xhat, nuhat).tail(lambda.size()));
  };
  h.homogeneous = std::move(H);
  return h;
}

namespace {

// ---------------------------------------------------------------------------
// Charted integration.  The flat layout is
//   normal chart       y = [x0, x(n), lambda(n)]
//   abnormal chart (a) y = [x0, x(n), alpha0, alpha(n)]
// and the abnormal pivot is carried beside the vector.

struct ChartCursor {
  Chart chart = Chart::Normal;
  int pivot = 0;
  Eigen::Index n = 0;

  Vec pack(const ContactState& s) const {
    Vec y;
    if (chart == Chart::Normal) {
      y.resize(2 * n + 1);
      y[0] = s.xhat.x0;
      y.segment(1, n) = s.xhat.x;
      y.tail(n) = s.pc.coords();
    } else {
      y.resize(2 * n + 2);
      y[0] = s.xhat.x0;
      y.segment(1, n) = s.xhat.x;
      y[n + 1] = s.pc.alpha0();
      y.tail(n) = s.pc.coords();
    }
    return y;
  }

  ContactState unpack(const Vec& y) const {
    ExtendedState xs(y[0], y.segment(1, n));
    if (chart == Chart::Normal)
      return ContactState(std::move(xs), ProjectiveCostate::normal(y.tail(n)));
    return ContactState(std::move(xs),
                        ProjectiveCostate::abnormal(pivot, y.tail(n), y[n + 1]));
  }
};

class ChartedFlow {
 public:
  ChartedFlow(const ContactHamiltonian& h, const ContactIntegrationOptions& opts,
              Eigen::Index n)
      : h_(h), opts_(opts) {
    cursor_.n = n;
  }

  ChartCursor& cursor() { return cursor_; }

  OdeField field() {
    return [this](double, const Vec& y) -> Vec {
      const ContactState s = cursor_.unpack(y);
      Vec dy(y.size());
      if (cursor_.chart == Chart::Normal) {
        const ContactTangent v = contact_vector_field(h_, s);
        dy[0] = v.dx0;
        dy.segment(1, cursor_.n) = v.dx;
        dy.tail(cursor_.n) = v.dc;
      } else {
        const ContactTangent v = contact_vector_field_abnormal(h_, s);
        dy[0] = v.dx0;
        dy.segment(1, cursor_.n) = v.dx;
        dy[cursor_.n + 1] = v.dalpha0;
        dy.tail(cursor_.n) = v.dc;
      }
      return dy;
    };
  }

  ContactSample sample(double t, const Vec& y) const {
    ContactSample smp{t, cursor_.unpack(y), 0.0, Vec()};
    smp.h = h_.eval(smp.state);
    if (h_.control_witness) smp.u = h_.control_witness(smp.state);
    return smp;
  }

  std::int64_t signature(const Vec& y) const {
    return h_.control_signature(cursor_.unpack(y));
  }

  bool has_signature() const {
    return opts_.locate_control_switches && static_cast<bool>(h_.control_signature);
  }

  // Whether the post-step value has left the current chart's trustworthy
  // region (non-finite entries, or coordinates so large the next step cannot
  // be resolved).  Such a step must be redone in a different chart.
  bool step_untrustworthy(const Vec& y_next) const {
    if (!y_next.allFinite()) return true;
    if (cursor_.chart == Chart::Normal)
      return y_next.tail(cursor_.n).cwiseAbs().maxCoeff() * opts_.eps0 >= 1.0;
    return y_next.tail(cursor_.n + 1).cwiseAbs().maxCoeff() > opts_.coord_bound;
  }

  // Convert the (pre-step) point into a chart that can carry the flow past
  // the current chart's singular locus.  Returns false when no other chart
  // contains the point.
  bool force_leave_chart(Vec& y) {
    const ContactState s = cursor_.unpack(y);
    if (cursor_.chart == Chart::Normal) {
      const Vec& lambda = s.pc.coords();
      if (lambda.cwiseAbs().maxCoeff() == 0.0) return false;  // pure-nu0 ray
      switch_to(y, s, ChartTarget::abnormal(largest_entry(lambda)));
      return true;
    }
    const int a = largest_entry(s.pc.coords());
    if (a != cursor_.pivot) {
      switch_to(y, s, ChartTarget::abnormal(a));
      return true;
    }
    if (s.pc.alpha0() != 0.0) {
      switch_to(y, s, ChartTarget::normal());
      return true;
    }
    return false;
  }

  // Returns true (and mutates y / cursor) when a chart change was required.
  bool maybe_switch_chart(Vec& y) {
    const ContactState s = cursor_.unpack(y);
    const double bound = opts_.coord_bound;
    if (!y.allFinite()) throw StepFailure("non-finite state during contact integration");
    if (cursor_.chart == Chart::Normal) {
      const Vec& lambda = s.pc.coords();
      const double m = lambda.cwiseAbs().maxCoeff();
      if (m > bound) throw ChartSingularity("normal-chart coordinates exceeded the bound");
      // Leave proactively: once max|lambda| reaches the exit bound the local
      // timescale 1/|lambda| is shrinking toward the step size, and waiting
      // any longer costs accuracy.  The conversion itself is exact.
      if (m >= opts_.normal_exit_bound) {
        switch_to(y, s, ChartTarget::abnormal(largest_entry(lambda)));
        return true;
      }
      return false;
    }
    const Vec& alpha = s.pc.coords();
    const double am = alpha.cwiseAbs().maxCoeff();
    if (am > bound || std::abs(s.pc.alpha0()) > bound)
      throw ChartSingularity("abnormal-chart coordinates exceeded the bound");
    if (am <= opts_.normal_reentry_bound * std::abs(s.pc.alpha0())) {
      switch_to(y, s, ChartTarget::normal());
      return true;
    }
    if (am > opts_.repivot_threshold) {
      const int a = largest_entry(alpha);
      if (a != cursor_.pivot) {
        switch_to(y, s, ChartTarget::abnormal(a));
        return true;
      }
    }
    return false;
  }

 private:
  static int largest_entry(const Vec& v) {
    int a = 1;
    for (Eigen::Index i = 1; i < v.size(); ++i)
      if (std::abs(v[i]) > std::abs(v[a - 1])) a = static_cast<int>(i) + 1;
    return a;
  }

  void switch_to(Vec& y, const ContactState& s, const ChartTarget& target) {
    const ProjectiveCostate next = switch_chart(s.pc, target);
    cursor_.chart = target.chart;
    cursor_.pivot = target.pivot;
    y = cursor_.pack(ContactState(s.xhat, next));
  }

  const ContactHamiltonian& h_;
  const ContactIntegrationOptions& opts_;
  ChartCursor cursor_;
};

bool controls_jumped(const Vec& ua, const Vec& ub, const Vec& scale) {
  for (Eigen::Index i = 0; i < ua.size(); ++i) {
    const double s = (scale.size() == ua.size()) ? scale[i] : 1.0;
    if (std::abs(ua[i] - ub[i]) > 0.05 * std::max(s, 1e-12)) return true;
  }
  return false;
}

}  // namespace

ContactTrajectory integrate_contact(const ContactHamiltonian& h, const ContactState& s0,
                                    double ta, double tb,
                                    const ContactIntegrationOptions& opts) {
  if (!(tb > ta) && !(tb < ta)) throw InvalidInput("empty integration span");
  const Eigen::Index n = s0.n();
  ChartedFlow flow(h, opts, n);
  flow.cursor().chart = s0.pc.chart();
  flow.cursor().pivot = s0.pc.pivot();
  Vec y = flow.cursor().pack(s0);

  ContactTrajectory traj;
  traj.samples.push_back(flow.sample(ta, y));
  // A freshly classified point may already sit outside its chart's comfort
  // zone; normalize before stepping.
  if (flow.maybe_switch_chart(y)) {
    traj.chart_switch_times.push_back(ta);
    traj.samples.push_back(flow.sample(ta, y));
  }

  const OdeField field = flow.field();
  const double span = std::abs(tb - ta);
  const double dir = tb > ta ? 1.0 : -1.0;
  const bool rk4 = opts.ode.method == OdeMethod::RK4;
  double t = ta;
  double h45 = dir * std::min(span, 1e-2);  // RK45 step proposal
  double last_forced_t = std::numeric_limits<double>::quiet_NaN();
  int forced_count = 0;

  // Outer loop replans a segment after every switch; the inner loop walks a
  // uniform grid (RK4) or adapts step sizes (RK45) until the segment ends.
  while (dir * (tb - t) > 1e-15 * span) {
    const double seg_start = t;
    long count = 1;
    double hstep = tb - t;
    if (rk4) {
      count = std::max(
          1L, static_cast<long>(std::ceil(std::abs(tb - t) / opts.ode.step - 1e-12)));
      hstep = (tb - t) / static_cast<double>(count);
    }
    bool replan = false;
    long k = 0;
    while (!replan && dir * (tb - t) > 1e-15 * span) {
      double h_used = 0.0;
      Vec y_next;
      bool step_failed = false;
      if (rk4) {
        if (k >= count) break;
        h_used = hstep;
        y_next = rk4_step(field, t, y, h_used);
        step_failed = flow.step_untrustworthy(y_next);
      } else {
        double h_try = h45;
        for (;;) {
          if (std::abs(h_try) > std::abs(tb - t)) h_try = tb - t;
          double h_next = h_try;
          if (rk45_try_step(field, t, y, h_try, opts.ode.rel_tol, opts.ode.abs_tol, y_next,
                            h_next)) {
            h_used = h_try;
            h45 = h_next;
            break;
          }
          h_try = h_next;
          if (std::abs(h_try) < 1e-14 * span) {
            step_failed = true;  // the step size underflowed against a singularity
            break;
          }
        }
        if (!step_failed) step_failed = flow.step_untrustworthy(y_next);
        if (step_failed) h45 = dir * std::min(span, 1e-2);
      }

      if (step_failed) {
        // The flow is running into this chart's singular locus.  Convert at
        // the last good point and redo the step in a chart that contains the
        // locus (the abnormal charts cover nu0 = 0; the normal chart covers
        // large alpha0).
        if (t == last_forced_t && ++forced_count > 3)
          throw StepFailure("contact step keeps failing near t = " + std::to_string(t));
        if (t != last_forced_t) {
          last_forced_t = t;
          forced_count = 1;
        }
        if (!flow.force_leave_chart(y))
          throw ChartSingularity("no chart carries the contact flow past t = " +
                                 std::to_string(t));
        traj.chart_switch_times.push_back(t);
        traj.samples.push_back(flow.sample(t, y));
        replan = true;
        continue;
      }

      // Locate a control switch inside the step by bisection on the argmax
      // signature, then redo the step split at the switch with the control
      // branch pinned on each side, so no RK4 stage evaluates across the
      // discontinuity.
      bool cut_short = false;
      if (flow.has_signature() && std::abs(h_used) > opts.switch_time_tol) {
        const std::int64_t sig0 = flow.signature(y);
        if (flow.signature(y_next) != sig0) {
          double lo = 0.0, hi = 1.0;
          while ((hi - lo) * std::abs(h_used) > opts.switch_time_tol) {
            const double mid = 0.5 * (lo + hi);
            const Vec ym = rk4_step(field, t, y, mid * h_used);
            if (flow.signature(ym) == sig0)
              lo = mid;
            else
              hi = mid;
          }
          const double t_switch = t + 0.5 * (lo + hi) * h_used;
          const Vec u_before =
              h.control_witness ? h.control_witness(flow.cursor().unpack(y)) : Vec();
          const Vec y_past = rk4_step(field, t, y, hi * h_used);
          const Vec u_after =
              h.control_witness ? h.control_witness(flow.cursor().unpack(y_past)) : Vec();
          const bool jumped = u_before.size() == 0 ||
                              controls_jumped(u_before, u_after, h.control_jump_scale);
          if (jumped) traj.control_switch_times.push_back(t_switch);
          bool split_done = false;
          if (h.fixed_control && u_before.size() > 0 && u_after.size() > 0) {
            const double t_end =
                rk4 ? ((k + 1 == count) ? tb : seg_start + hstep * static_cast<double>(k + 1))
                    : t + h_used;
            const ContactHamiltonian h_pre = h.fixed_control(u_before);
            const ContactHamiltonian h_post = h.fixed_control(u_after);
            ChartedFlow pre(h_pre, opts, n), post(h_post, opts, n);
            pre.cursor() = flow.cursor();
            post.cursor() = flow.cursor();
            const Vec y_mid = rk4_step(pre.field(), t, y, t_switch - t);
            const Vec y_end = rk4_step(post.field(), t_switch, y_mid, t_end - t_switch);
            if (y_mid.allFinite() && y_end.allFinite()) {
              ContactSample smp = flow.sample(t_switch, y_mid);
              smp.u = u_before;
              traj.samples.push_back(smp);
              smp.u = u_after;
              traj.samples.push_back(smp);
              y_next = y_end;
              split_done = true;
            }
          }
          if (!split_done) {
            // No pinned variant: end the step just past the switch instead.
            y_next = y_past;
            h_used *= hi;
            cut_short = true;
            replan = true;
          }
        }
      }

      ++k;
      if (rk4 && !cut_short)
        t = (k == count) ? tb : seg_start + hstep * static_cast<double>(k);
      else
        t += h_used;
      y = y_next;
      traj.samples.push_back(flow.sample(t, y));
      if (flow.maybe_switch_chart(y)) {
        traj.chart_switch_times.push_back(t);
        traj.samples.push_back(flow.sample(t, y));
        replan = true;
      }
    }
  }
  return traj;
}

}  // namespace cpmp
