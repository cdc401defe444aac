#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cpmp/contact.hpp"
#include "cpmp/extended_state.hpp"

namespace cpmp {

// Admissible control set: a closed box or a finite list of points.
struct BoxControlSet {
  Vec lo, hi;
};
struct FiniteControlSet {
  std::vector<Vec> points;
};
using ControlSet = std::variant<BoxControlSet, FiniteControlSet>;

struct TargetConstraint {
  Eigen::Index k = 0;
  std::function<Vec(const Vec&)> g;   // R^n -> R^k, target is {g = 0}
  std::function<Mat(const Vec&)> Dg;  // k x n, full row rank on the target
  std::string description;
};

struct TerminalCost {
  std::function<double(const Vec&)> K;
  std::function<Vec(const Vec&)> dK;
  std::function<Mat(const Vec&)> d2K;  // optional, used when folding K into L
};

struct TimeMode {
  bool free_terminal = true;
  double t1 = 0.0;  // meaningful only when !free_terminal
  static TimeMode free_time() { return {true, 0.0}; }
  static TimeMode fixed(double t1) { return {false, t1}; }
};

// Control problem in Lagrange/Mayer form: minimize the accumulated running
// cost L (plus optional terminal cost K) over controls steering f from x0 at
// t0 into the target set.
struct OcpProblem {
  std::string name;
  Eigen::Index n = 0, m = 0;
  std::function<Vec(const Vec& x, const Vec& u)> f;
  std::function<double(const Vec& x, const Vec& u)> L;
  std::function<Mat(const Vec&, const Vec&)> dfdx;  // optional
  std::function<Vec(const Vec&, const Vec&)> dLdx;  // optional
  ControlSet control;
  Vec x0;
  double t0 = 0.0;
  std::optional<TargetConstraint> target;  // absent: free endpoint
  std::optional<TerminalCost> terminal_cost;
  TimeMode time = TimeMode::free_time();
  // Analytic maximizer of lambda.f - L over the control set (normal chart).
  std::function<Vec(const Vec& x, const Vec& lambda)> argmax;  // optional

  Eigen::Index target_dim() const { return target ? target->k : 0; }
  Mat jac_f_x(const Vec& x, const Vec& u) const;   // closed form or central FD
  Vec grad_L_x(const Vec& x, const Vec& u) const;  // closed form or central FD
  void validate() const;                           // probes evaluators, checks shapes
};

// Membership test; throws ControlOutOfSet with a description when violated.
void require_in_control_set(const ControlSet& set, const Vec& u);

// Cost-augmented dynamics fhat(xhat, u) = (L(x,u), f(x,u)); the x0 slot never
// feeds back into the state equations.
std::function<Vec(const ExtendedState&, const Vec&)> extend_system(const OcpProblem& p);

// Pre-maximization Hamiltonian <nuhat, fhat(x,u)> = nu0 L + nu . f.
// Linear (hence degree-1 homogeneous) in nuhat.
double control_hamiltonian(const OcpProblem& p, const ExtendedState& xhat, const Vec& nuhat,
                           const Vec& u);

// Chart form of the same pairing, evaluated at the oriented representative:
// lambda.f - L in the normal chart, alpha.f on the abnormal locus.
double contact_control_hamiltonian(const OcpProblem& p, const ExtendedState& xhat,
                                   const ProjectiveCostate& pc, const Vec& u);

struct MaximizeOptions {
  int grid_points = 33;   // per-axis grid resolution
  int refine_rounds = 3;  // local refinement rounds
  double shrink = 0.25;   // window factor per round
};

struct ControlChoice {
  Vec u;
  double value = 0.0;          // maximized objective
  std::int64_t signature = 0;  // discrete argmax identifier (grid cell / list index)
};

// Maximize <nuhat, fhat(x,.)> over the control set: the analytic argmax is
// used when supplied and nu0 < 0 (where it is scale-consistent), finite sets
// are enumerated exactly, boxes are searched on a grid with local refinement.
// Deterministic tie-break: the first maximizer in enumeration order wins.
ControlChoice maximize_direction(const OcpProblem& p, const Vec& x, const Vec& nuhat,
                                 const MaximizeOptions& opts = {});

// Same maximization at the oriented representative of pc; `value` is then the
// optimal contact Hamiltonian h(xhat, pc).
ControlChoice maximize_control(const OcpProblem& p, const ExtendedState& xhat,
                               const ProjectiveCostate& pc, const MaximizeOptions& opts = {});

double optimal_contact_hamiltonian(const OcpProblem& p, const ExtendedState& xhat,
                                   const ProjectiveCostate& pc,
                                   const MaximizeOptions& opts = {});

// Contact Hamiltonian of the maximized problem, with envelope-theorem partial
// derivatives, the homogeneous symplectic extension, and control metadata for
// switch location.  This is the field the shooting integrator flows along.
ContactHamiltonian optimal_hamiltonian(const OcpProblem& p, const MaximizeOptions& opts = {});

// Absorb the terminal cost into the running cost along trajectories:
// Lfold = L + dK.f, terminal cost removed.  The costate of the folded problem
// is the original costate shifted by dK (the terminal-cost chart change).
OcpProblem fold_terminal_cost(const OcpProblem& p);

// Finite enumeration of the control set: the list itself, or the per-axis
// tensor grid with `points_per_axis` nodes for a box (lexicographic order,
// first axis most significant).
std::vector<Vec> control_grid(const ControlSet& set, int points_per_axis);

// Target-constraint builders.
TargetConstraint target_point(const Vec& xf);
// Pins a subset of coordinates (1-based indices) to given values.
TargetConstraint target_coordinates(const std::vector<int>& indices, const Vec& values,
                                    Eigen::Index n);

}  // namespace cpmp
