#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "cpmp/ocp.hpp"
#include "cpmp/ode.hpp"

namespace cpmp {

// Open-loop control: a piecewise-constant schedule (value u_j held on
// [t_j, t_{j+1}), last segment closed) or a closed-form evaluator u(t).
class ControlSignal {
 public:
  static ControlSignal constant(const Vec& u);
  static ControlSignal from_function(std::function<Vec(double)> u);
  static ControlSignal piecewise_constant(std::vector<double> breakpoints, std::vector<Vec> values);

  Vec eval(double t) const;  // piecewise signals clamp t to their span
  bool is_piecewise() const { return !times_.empty(); }
  const std::vector<double>& breakpoints() const { return times_; }
  const std::vector<Vec>& segment_values() const { return values_; }

 private:
  ControlSignal() = default;
  std::vector<double> times_;  // N+1 breakpoints when piecewise
  std::vector<Vec> values_;    // N segment values
  std::function<Vec(double)> fn_;
};

// Uniform-per-segment time series of flat vectors (extended states, tangents,
// or costate vectors all share this container).
struct StateTrajectory {
  std::vector<double> t;
  std::vector<Vec> y;
  std::size_t size() const { return t.size(); }
  // Linear interpolation between the bracketing samples; clamps outside.
  Vec at(double time) const;
};

// Sampled extremal with per-sample diagnostics, assembled by the shooting
// solver from the charted contact flow.
struct ExtremalSample {
  double t;
  ExtendedState xhat;
  ProjectiveCostate pc;
  Vec u;
  double h;
};

struct ExtremalTrajectory {
  std::vector<ExtremalSample> samples;
  std::vector<double> control_switch_times;
  std::vector<double> chart_switch_times;
  double pairing_defect = std::numeric_limits<double>::quiet_NaN();
  double max_principle_defect = std::numeric_limits<double>::quiet_NaN();
};

// Forward RK4 integration of the cost-augmented dynamics from
// xhat(ta) = (0, x_start), segment-by-segment so no RK4 step straddles a
// control discontinuity.  Grid nodes are uniform within each segment.
StateTrajectory integrate_extended(const OcpProblem& p, const ControlSignal& u, double ta,
                                   double tb, const Vec& x_start, const OdeOptions& opts = {});
StateTrajectory integrate_extended(const OcpProblem& p, const ControlSignal& u, double ta,
                                   double tb, const OdeOptions& opts = {});  // from p.x0

// Backward RK4 of the adjoint equation nu0' = 0 (exact no-op),
// nu_i' = -(df/dx)^T nu - nu0 dL/dx, with terminal value nu1 at traj.back().
// The state is re-integrated backward alongside the costate (augmented
// system anchored at the stored terminal node), so the sweep is a single
// fourth-order integration rather than one with interpolated coefficients.
// Output is aligned with the trajectory grid (ascending time).
StateTrajectory propagate_adjoint(const OcpProblem& p, const StateTrajectory& traj,
                                  const ControlSignal& u, const Vec& nu1);

// Forward RK4 of the variational equation dxhat' = Dfhat(x(t), u(t)) dxhat,
// where Dfhat stacks (dL/dx; df/dx) with a zero column for the cost slot.
// The state rides along in the same RK4 steps (stage-consistent Jacobians),
// reproducing the stored grid nodes exactly.
StateTrajectory propagate_tangent(const OcpProblem& p, const StateTrajectory& traj,
                                  const ControlSignal& u, const Vec& dxhat0);

// max_t |<nu(t), dxhat(t)> - <nu(t1), dxhat(t1)>| over a shared grid.
double pairing_defect(const StateTrajectory& costates, const StateTrajectory& tangents);

// Piecewise-constant signal replaying the sampled controls of an extremal.
ControlSignal to_control_signal(const ExtremalTrajectory& traj);

}  // namespace cpmp
