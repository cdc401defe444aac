#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "cpmp/extended_state.hpp"
#include "cpmp/ode.hpp"
#include "cpmp/projective.hpp"

namespace cpmp {

// Point of the contact phase space: extended state plus projective costate.
struct ContactState {
  ExtendedState xhat;
  ProjectiveCostate pc;

  ContactState(ExtendedState s, ProjectiveCostate c)
      : xhat(std::move(s)), pc(std::move(c)) {
    if (xhat.n() != pc.n()) throw InvalidInput("state/costate dimension mismatch");
  }
  Eigen::Index n() const { return xhat.n(); }
};

// Tangent vector in chart coordinates.  dc is d(lambda) in the normal chart
// and d(alpha) in an abnormal chart (where additionally dalpha0 tracks the
// nu0/nu_pivot ratio and dc[pivot-1] is identically zero).
struct ContactTangent {
  double dx0 = 0.0;
  Vec dx;
  Vec dc;
  double dalpha0 = 0.0;
};

// Degree-1 positively homogeneous Hamiltonian on the cotangent side,
// H(xhat, nuhat).  Analytic gradients are optional; central differences fill
// the gap.
struct HomogeneousHamiltonian {
  std::function<double(const Vec& xhat, const Vec& nuhat)> value;
  std::function<Vec(const Vec&, const Vec&)> d_xhat;   // optional
  std::function<Vec(const Vec&, const Vec&)> d_nuhat;  // optional

  double eval(const Vec& xhat, const Vec& nuhat) const;
  Vec grad_xhat(const Vec& xhat, const Vec& nuhat) const;
  Vec grad_nuhat(const Vec& xhat, const Vec& nuhat) const;
};

// Contact Hamiltonian in chart form.  `value` evaluates h in the normal
// chart; partial evaluators are optional (central differences otherwise).
// The homogeneous extension enables abnormal-chart flow and the symplectic
// cross-check; the control witness lets integrators locate argmax switches.
struct ContactHamiltonian {
  std::function<double(double x0, const Vec& x, const Vec& lambda)> value;
  std::function<double(double, const Vec&, const Vec&)> d_x0;  // optional
  std::function<Vec(double, const Vec&, const Vec&)> d_x;      // optional
  std::function<Vec(double, const Vec&, const Vec&)> d_lambda; // optional
  std::shared_ptr<const HomogeneousHamiltonian> homogeneous;   // optional
  std::function<Vec(const ContactState&)> control_witness;     // optional
  // Discrete signature of the maximizing control (e.g. grid-cell index).
  // A signature change between step endpoints triggers switch bisection.
  std::function<std::int64_t(const ContactState&)> control_signature;  // optional
  // Per-axis control scale used to tell genuine jumps from quantization
  // drift when reporting switch times (defaults to 1 per axis).
  Vec control_jump_scale;
  // Same Hamiltonian with the control pinned (no argmax).  Used to split a
  // step at a located switch so no RK4 stage evaluates the wrong branch.
  std::function<ContactHamiltonian(const Vec& u)> fixed_control;  // optional

  struct Partials {
    double x0 = 0.0;
    Vec x;
    Vec lambda;
  };

  // Chart-aware evaluation: normal chart via `value`, abnormal chart via the
  // homogeneous extension at the oriented representative.
  double eval(const ContactState& s) const;
  Partials partials_normal(double x0, const Vec& x, const Vec& lambda) const;
};

// theta(w) = -dx0 + lambda . dx for the canonical contact form in the normal
// chart.  Throws ChartSingularity for abnormal-chart states.
double contact_form(const ContactState& s, const ContactTangent& w);

// omega = dx^i wedge dlambda_i evaluated on two chart tangents.
double two_form(const ContactTangent& v, const ContactTangent& w);

// Reeb vector field of theta: constant (-1, 0, 0).
ContactTangent reeb_field(Eigen::Index n);

// Contact Hamiltonian vector field in the normal chart:
//   dx_i      =  dh/dlambda_i
//   dlambda_i = -dh/dx_i - lambda_i dh/dx0
//   dx0       =  lambda . dh/dlambda - h
// These are the unique solutions of theta(X)=h, i_X omega = dh - (dh.R) theta.
ContactTangent contact_vector_field(const ContactHamiltonian& h, const ContactState& s);

// The same flow expressed in an abnormal chart, obtained by projecting the
// homogeneous symplectic flow into the chart alpha = nu / nu_pivot (requires
// the homogeneous extension).  dc[pivot-1] is exactly zero.
ContactTangent contact_vector_field_abnormal(const ContactHamiltonian& h, const ContactState& s);

// Hamiltonian flow of the homogeneous lift on T*R^{n+1}:
//   dxhat = dH/dnuhat, dnuhat = -dH/dxhat.
void symplectic_lift_field(const HomogeneousHamiltonian& H, const Vec& xhat, const Vec& nuhat,
                           Vec& dxhat, Vec& dnuhat);

// Chart form of a homogeneous Hamiltonian: h(x0, x, lambda) = H(xhat, (-1, lambda))
// with partial evaluators delegated to H.  Carries H as its own homogeneous
// extension, so the result flows in every chart.
ContactHamiltonian chart_hamiltonian(std::shared_ptr<const HomogeneousHamiltonian> H);

struct ContactIntegrationOptions {
  OdeOptions ode;
  double eps0 = kChartEps0;          // chart-selection threshold
  // Leave the normal chart once max|lambda_i| >= normal_exit_bound: past
  // that point the costate direction steepens toward the abnormal locus and
  // fixed-step accuracy degrades, while the chart conversion is exact.
  // Return only when max|lambda_i| would be <= normal_reentry_bound
  // (max|alpha_i| <= bound * |alpha0|).  The gap between the two bounds is
  // the hysteresis that prevents flapping around the locus.
  double normal_exit_bound = 50.0;
  double normal_reentry_bound = 10.0;
  double repivot_threshold = 1e6;    // re-pivot when |alpha| grows past this
  double coord_bound = 1e12;         // ChartSingularity beyond this magnitude
  double switch_time_tol = 1e-10;    // control-switch bisection tolerance
  bool locate_control_switches = true;
};

struct ContactSample {
  double t = 0.0;
  ContactState state;
  double h = 0.0;  // chart Hamiltonian at the stored representative
  Vec u;           // empty unless the Hamiltonian carries a control witness
};

struct ContactTrajectory {
  std::vector<ContactSample> samples;
  std::vector<double> control_switch_times;
  std::vector<double> chart_switch_times;

  const ContactSample& front() const { return samples.front(); }
  const ContactSample& back() const { return samples.back(); }
};

// Integrate the contact flow of h over [ta, tb].  Fixed-step RK4 by default
// (uniform grid within each segment; segments break at control switches and
// chart switches) or adaptive RK45.  Charts are switched automatically when
// the chart-selection threshold fires mid-trajectory; at a switch the sample
// is recorded in both charts at the same time stamp.
ContactTrajectory integrate_contact(const ContactHamiltonian& h, const ContactState& s0,
                                    double ta, double tb,
                                    const ContactIntegrationOptions& opts = {});

}  // namespace cpmp
