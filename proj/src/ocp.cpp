#include "cpmp/ocp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "cpmp/errors.hpp"

namespace cpmp {
namespace {

Vec probe_control(const ControlSet& set) {
  if (const auto* box = std::get_if<BoxControlSet>(&set)) return 0.5 * (box->lo + box->hi);
  const auto& pts = std::get<FiniteControlSet>(set).points;
  if (pts.empty()) throw InvalidInput("finite control set is empty");
  return pts.front();
}

Eigen::Index control_dim(const ControlSet& set) {
  if (const auto* box = std::get_if<BoxControlSet>(&set)) return box->lo.size();
  return std::get<FiniteControlSet>(set).points.front().size();
}

// Per-axis diameter of the control set, used to scale jump detection.
Vec control_diameter(const ControlSet& set) {
  if (const auto* box = std::get_if<BoxControlSet>(&set)) return box->hi - box->lo;
  const auto& pts = std::get<FiniteControlSet>(set).points;
  Vec lo = pts.front(), hi = pts.front();
  for (const Vec& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return hi - lo;
}

// Snap a box control to a flat coarse-grid index (first axis most
// significant), so that nearby maximizers share a signature.
std::int64_t box_signature(const BoxControlSet& box, const Vec& u, int grid_points) {
  std::int64_t sig = 0;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    const double width = box.hi[j] - box.lo[j];
    std::int64_t cell = 0;
    if (width > 0.0) {
      const double frac = (u[j] - box.lo[j]) / width;
      cell = static_cast<std::int64_t>(std::llround(frac * (grid_points - 1)));
      cell = std::clamp<std::int64_t>(cell, 0, grid_points - 1);
    }
    sig = sig * grid_points + cell;
  }
  return sig;
}

struct GridBest {
  bool found = false;
  Vec u;
  double value = -std::numeric_limits<double>::infinity();
};

// Tensor-grid sweep over [lo, hi] with `pts` points per axis; keeps the first
// strict maximizer in lexicographic order.
void sweep_box(const std::function<double(const Vec&)>& score, const Vec& lo, const Vec& hi,
               int pts, GridBest& best) {
  const Eigen::Index m = lo.size();
  std::vector<int> idx(static_cast<std::size_t>(m), 0);
  Vec u(m);
  for (;;) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double w = hi[j] - lo[j];
      u[j] = (w > 0.0 && pts > 1) ? lo[j] + w * idx[static_cast<std::size_t>(j)] / (pts - 1)
                                  : lo[j];
    }
    const double s = score(u);
    if (std::isfinite(s) && (!best.found || s > best.value)) {
      best.found = true;
      best.u = u;
      best.value = s;
    }
    // Odometer increment, last axis fastest.
    Eigen::Index j = m - 1;
    for (; j >= 0; --j) {
      if (++idx[static_cast<std::size_t>(j)] < pts) break;
      idx[static_cast<std::size_t>(j)] = 0;
    }
    if (j < 0) break;
  }
}

ControlChoice maximize_over_set(const ControlSet& set,
                                const std::function<double(const Vec&)>& score,
                                const MaximizeOptions& opts) {
  if (const auto* fin = std::get_if<FiniteControlSet>(&set)) {
    ControlChoice out;
    bool found = false;
    for (std::size_t i = 0; i < fin->points.size(); ++i) {
      const double s = score(fin->points[i]);
      if (std::isfinite(s) && (!found || s > out.value)) {
        found = true;
        out.u = fin->points[i];
        out.value = s;
        out.signature = static_cast<std::int64_t>(i);
      }
    }
    if (!found) throw EvaluationFailure("control objective is non-finite on the whole set");
    return out;
  }
  const auto& box = std::get<BoxControlSet>(set);
  GridBest best;
  sweep_box(score, box.lo, box.hi, opts.grid_points, best);
  if (!best.found) throw EvaluationFailure("control objective is non-finite on the whole set");
  Vec width = box.hi - box.lo;
  for (int r = 1; r <= opts.refine_rounds; ++r) {
    width *= opts.shrink;
    const Vec lo = (best.u - 0.5 * width).cwiseMax(box.lo);
    const Vec hi = (best.u + 0.5 * width).cwiseMin(box.hi);
    sweep_box(score, lo, hi, opts.grid_points, best);
  }
  ControlChoice out;
  out.u = best.u;
  out.value = best.value;
  out.signature = box_signature(box, best.u, opts.grid_points);
  return out;
}

}  // namespace

Mat OcpProblem::jac_f_x(const Vec& x, const Vec& u) const {
  if (dfdx) return dfdx(x, u);
  Mat J(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    J.col(i) = central_partial([&](const Vec& xx) { return f(xx, u); }, x, i);
  }
  return J;
}

Vec OcpProblem::grad_L_x(const Vec& x, const Vec& u) const {
  if (dLdx) return dLdx(x, u);
  return central_gradient([&](const Vec& xx) { return L(xx, u); }, x);
}

void OcpProblem::validate() const {
  if (n < 1) throw InvalidInput("state dimension must be at least 1");
  if (m < 1) throw InvalidInput("control dimension must be at least 1");
  if (!f || !L) throw InvalidInput("dynamics and running cost must both be provided");
  if (x0.size() != n) throw InvalidInput("initial state has wrong dimension");
  if (const auto* box = std::get_if<BoxControlSet>(&control)) {
    if (box->lo.size() != m || box->hi.size() != m)
      throw InvalidInput("control box bounds have wrong dimension");
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!(box->lo[j] <= box->hi[j]) || !std::isfinite(box->lo[j]) || !std::isfinite(box->hi[j]))
        throw InvalidInput("control box bounds must be finite with lo <= hi");
    }
  } else {
    const auto& pts = std::get<FiniteControlSet>(control).points;
    if (pts.empty()) throw InvalidInput("finite control set is empty");
    for (const Vec& pt : pts)
      if (pt.size() != m) throw InvalidInput("finite control point has wrong dimension");
  }
  const Vec u = probe_control(control);
  const Vec fx = f(x0, u);
  if (fx.size() != n) throw InvalidInput("dynamics return wrong dimension");
  if (!fx.allFinite() || !std::isfinite(L(x0, u)))
    throw InvalidInput("dynamics or running cost non-finite at the initial state");
  if (target) {
    if (target->k < 1 || target->k > n)
      throw InvalidInput("target codimension must lie in [1, n]");
    if (!target->g || !target->Dg) throw InvalidInput("target needs both g and Dg");
    if (target->g(x0).size() != target->k || target->Dg(x0).rows() != target->k ||
        target->Dg(x0).cols() != n)
      throw InvalidInput("target maps return wrong dimensions");
  }
  if (terminal_cost && (!terminal_cost->K || !terminal_cost->dK))
    throw InvalidInput("terminal cost needs both K and dK");
  if (!time.free_terminal && !(time.t1 > t0))
    throw InvalidInput("fixed terminal time must exceed the initial time");
}

void require_in_control_set(const ControlSet& set, const Vec& u) {
  if (u.size() != control_dim(set)) throw ControlOutOfSet("control has wrong dimension");
  if (const auto* box = std::get_if<BoxControlSet>(&set)) {
    for (Eigen::Index j = 0; j < u.size(); ++j) {
      if (u[j] < box->lo[j] || u[j] > box->hi[j]) {
        std::ostringstream os;
        os << "control component " << (j + 1) << " = " << u[j] << " outside ["
           << box->lo[j] << ", " << box->hi[j] << "]";
        throw ControlOutOfSet(os.str());
      }
    }
    return;
  }
  for (const Vec& pt : std::get<FiniteControlSet>(set).points)
    if (pt == u) return;
  throw ControlOutOfSet("control is not a member of the finite control set");
}

std::function<Vec(const ExtendedState&, const Vec&)> extend_system(const OcpProblem& p) {
  auto f = p.f;
  auto L = p.L;
  const Eigen::Index n = p.n;
  return [f, L, n](const ExtendedState& xhat, const Vec& u) {
    Vec out(n + 1);
    out[0] = L(xhat.x, u);
    out.tail(n) = f(xhat.x, u);
    return out;
  };
}

double control_hamiltonian(const OcpProblem& p, const ExtendedState& xhat, const Vec& nuhat,
                           const Vec& u) {
  if (nuhat.size() != p.n + 1) throw InvalidInput("costate vector has wrong dimension");
  require_in_control_set(p.control, u);
  return nuhat[0] * p.L(xhat.x, u) + nuhat.tail(p.n).dot(p.f(xhat.x, u));
}

double contact_control_hamiltonian(const OcpProblem& p, const ExtendedState& xhat,
                                   const ProjectiveCostate& pc, const Vec& u) {
  return control_hamiltonian(p, xhat, representative(pc), u);
}

ControlChoice maximize_direction(const OcpProblem& p, const Vec& x, const Vec& nuhat,
                                 const MaximizeOptions& opts) {
  if (p.argmax && nuhat[0] < 0.0) {
    const Vec lambda = nuhat.tail(p.n) / (-nuhat[0]);
    ControlChoice out;
    out.u = p.argmax(x, lambda);
    require_in_control_set(p.control, out.u);
    out.value = nuhat[0] * p.L(x, out.u) + nuhat.tail(p.n).dot(p.f(x, out.u));
    if (!std::isfinite(out.value))
      throw EvaluationFailure("analytic control maximizer gave a non-finite value");
    if (const auto* box = std::get_if<BoxControlSet>(&p.control)) {
      out.signature = box_signature(*box, out.u, opts.grid_points);
    } else {
      const auto& pts = std::get<FiniteControlSet>(p.control).points;
      out.signature = static_cast<std::int64_t>(
          std::find(pts.begin(), pts.end(), out.u) - pts.begin());
    }
    return out;
  }
  auto score = [&](const Vec& u) {
    return nuhat[0] * p.L(x, u) + nuhat.tail(p.n).dot(p.f(x, u));
  };
  return maximize_over_set(p.control, score, opts);
}

ControlChoice maximize_control(const OcpProblem& p, const ExtendedState& xhat,
                               const ProjectiveCostate& pc, const MaximizeOptions& opts) {
  return maximize_direction(p, xhat.x, representative(pc), opts);
}

double optimal_contact_hamiltonian(const OcpProblem& p, const ExtendedState& xhat,
                                   const ProjectiveCostate& pc, const MaximizeOptions& opts) {
  return maximize_control(p, xhat, pc, opts).value;
}

namespace {

// Contact Hamiltonian of the control Hamiltonian at a pinned control value:
// h_u = -L(x,u) + lambda . f(x,u) in the normal chart, with the homogeneous
// extension nu0 L + nu . f so it flows in every chart.
ContactHamiltonian fixed_control_hamiltonian(std::shared_ptr<const OcpProblem> prob, Vec u) {
  ContactHamiltonian h;
  h.value = [prob, u](double, const Vec& x, const Vec& lambda) {
    return -prob->L(x, u) + lambda.dot(prob->f(x, u));
  };
  h.d_x0 = [](double, const Vec&, const Vec&) { return 0.0; };
  h.d_x = [prob, u](double, const Vec& x, const Vec& lambda) {
    return Vec(prob->jac_f_x(x, u).transpose() * lambda - prob->grad_L_x(x, u));
  };
  h.d_lambda = [prob, u](double, const Vec& x, const Vec&) { return prob->f(x, u); };
  auto homog = std::make_shared<HomogeneousHamiltonian>();
  homog->value = [prob, u](const Vec& xhat, const Vec& nuhat) {
    const Vec x = xhat.tail(prob->n);
    return nuhat[0] * prob->L(x, u) + nuhat.tail(prob->n).dot(prob->f(x, u));
  };
  homog->d_xhat = [prob, u](const Vec& xhat, const Vec& nuhat) {
    const Vec x = xhat.tail(prob->n);
    Vec g(prob->n + 1);
    g[0] = 0.0;
    g.tail(prob->n) =
        prob->jac_f_x(x, u).transpose() * nuhat.tail(prob->n) + nuhat[0] * prob->grad_L_x(x, u);
    return g;
  };
  homog->d_nuhat = [prob, u](const Vec& xhat, const Vec&) {
    const Vec x = xhat.tail(prob->n);
    Vec fh(prob->n + 1);
    fh[0] = prob->L(x, u);
    fh.tail(prob->n) = prob->f(x, u);
    return fh;
  };
  h.homogeneous = homog;
  return h;
}

}  // namespace

ContactHamiltonian optimal_hamiltonian(const OcpProblem& p, const MaximizeOptions& opts) {
  auto prob = std::make_shared<const OcpProblem>(p);
  ContactHamiltonian h;
  h.value = [prob, opts](double, const Vec& x, const Vec& lambda) {
    Vec nuhat(prob->n + 1);
    nuhat[0] = -1.0;
    nuhat.tail(prob->n) = lambda;
    return maximize_direction(*prob, x, nuhat, opts).value;
  };
  h.d_x0 = [](double, const Vec&, const Vec&) { return 0.0; };
  // Envelope theorem: differentiate at the frozen maximizer.
  h.d_x = [prob, opts](double, const Vec& x, const Vec& lambda) {
    Vec nuhat(prob->n + 1);
    nuhat[0] = -1.0;
    nuhat.tail(prob->n) = lambda;
    const Vec u = maximize_direction(*prob, x, nuhat, opts).u;
    return Vec(prob->jac_f_x(x, u).transpose() * lambda - prob->grad_L_x(x, u));
  };
  h.d_lambda = [prob, opts](double, const Vec& x, const Vec& lambda) {
    Vec nuhat(prob->n + 1);
    nuhat[0] = -1.0;
    nuhat.tail(prob->n) = lambda;
    const Vec u = maximize_direction(*prob, x, nuhat, opts).u;
    return prob->f(x, u);
  };
  auto homog = std::make_shared<HomogeneousHamiltonian>();
  homog->value = [prob, opts](const Vec& xhat, const Vec& nuhat) {
    return maximize_direction(*prob, xhat.tail(prob->n), nuhat, opts).value;
  };
  homog->d_xhat = [prob, opts](const Vec& xhat, const Vec& nuhat) {
    const Vec x = xhat.tail(prob->n);
    const Vec u = maximize_direction(*prob, x, nuhat, opts).u;
    Vec g(prob->n + 1);
    g[0] = 0.0;  // dynamics and cost do not see the accumulated cost slot
    g.tail(prob->n) =
        prob->jac_f_x(x, u).transpose() * nuhat.tail(prob->n) + nuhat[0] * prob->grad_L_x(x, u);
    return g;
  };
  homog->d_nuhat = [prob, opts](const Vec& xhat, const Vec& nuhat) {
    const Vec x = xhat.tail(prob->n);
    const Vec u = maximize_direction(*prob, x, nuhat, opts).u;
    Vec fh(prob->n + 1);
    fh[0] = prob->L(x, u);
    fh.tail(prob->n) = prob->f(x, u);
    return fh;
  };
  h.homogeneous = homog;
  h.control_witness = [prob, opts](const ContactState& s) {
    return maximize_control(*prob, s.xhat, s.pc, opts).u;
  };
  h.control_signature = [prob, opts](const ContactState& s) {
    return maximize_control(*prob, s.xhat, s.pc, opts).signature;
  };
  h.control_jump_scale = control_diameter(p.control);
  h.fixed_control = [prob](const Vec& u) { return fixed_control_hamiltonian(prob, u); };
  return h;
}

OcpProblem fold_terminal_cost(const OcpProblem& p) {
  if (!p.terminal_cost) throw InvalidInput("problem has no terminal cost to fold");
  OcpProblem q = p;
  q.name = p.name + "_folded";
  const TerminalCost tc = *p.terminal_cost;
  auto f = p.f;
  auto L = p.L;
  q.L = [f, L, tc](const Vec& x, const Vec& u) { return L(x, u) + tc.dK(x).dot(f(x, u)); };
  if (p.dLdx && p.dfdx && tc.d2K) {
    auto dLdx = p.dLdx;
    auto dfdx = p.dfdx;
    q.dLdx = [f, dLdx, dfdx, tc](const Vec& x, const Vec& u) {
      return Vec(dLdx(x, u) + tc.d2K(x) * f(x, u) + dfdx(x, u).transpose() * tc.dK(x));
    };
  } else {
    q.dLdx = nullptr;  // central-difference fallback on the folded running cost
  }
  if (p.argmax) {
    auto argmax = p.argmax;
    q.argmax = [argmax, tc](const Vec& x, const Vec& lambda) {
      return argmax(x, Vec(lambda - tc.dK(x)));
    };
  }
  q.terminal_cost.reset();
  return q;
}

std::vector<Vec> control_grid(const ControlSet& set, int points_per_axis) {
  if (points_per_axis < 1) throw InvalidInput("control grid needs at least one point per axis");
  if (const auto* fin = std::get_if<FiniteControlSet>(&set)) return fin->points;
  const auto& box = std::get<BoxControlSet>(set);
  const Eigen::Index m = box.lo.size();
  std::vector<Vec> out;
  std::vector<int> idx(static_cast<std::size_t>(m), 0);
  Vec u(m);
  for (;;) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double w = box.hi[j] - box.lo[j];
      u[j] = (w > 0.0 && points_per_axis > 1)
                 ? box.lo[j] + w * idx[static_cast<std::size_t>(j)] / (points_per_axis - 1)
                 : box.lo[j];
    }
    out.push_back(u);
    Eigen::Index j = m - 1;
    for (; j >= 0; --j) {
      if (++idx[static_cast<std::size_t>(j)] < points_per_axis) break;
      idx[static_cast<std::size_t>(j)] = 0;
    }
    if (j < 0) break;
  }
  return out;
}

TargetConstraint target_point(const Vec& xf) {
  TargetConstraint t;
  t.k = xf.size();
  t.g = [xf](const Vec& x) { return Vec(x - xf); };
  const Eigen::Index n = xf.size();
  t.Dg = [n](const Vec&) { return Mat(Mat::Identity(n, n)); };
  t.description = "point target";
  return t;
}

TargetConstraint target_coordinates(const std::vector<int>& indices, const Vec& values,
                                    Eigen::Index n) {
  if (values.size() != static_cast<Eigen::Index>(indices.size()))
    throw InvalidInput("coordinate target needs one value per pinned index");
  for (int idx : indices)
    if (idx < 1 || idx > n) throw InvalidInput("coordinate target index out of range");
  TargetConstraint t;
  t.k = static_cast<Eigen::Index>(indices.size());
  t.g = [indices, values](const Vec& x) {
    Vec g(static_cast<Eigen::Index>(indices.size()));
    for (std::size_t i = 0; i < indices.size(); ++i)
      g[static_cast<Eigen::Index>(i)] = x[indices[i] - 1] - values[static_cast<Eigen::Index>(i)];
    return g;
  };
  t.Dg = [indices, n](const Vec&) {
    Mat D = Mat::Zero(static_cast<Eigen::Index>(indices.size()), n);
    for (std::size_t i = 0; i < indices.size(); ++i)
      D(static_cast<Eigen::Index>(i), indices[i] - 1) = 1.0;
    return D;
  };
  t.description = "coordinate target";
  return t;
}

}  // namespace cpmp
