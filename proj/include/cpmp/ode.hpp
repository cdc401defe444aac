#pragma once

#include <functional>
#include <vector>

#include "cpmp/numeric.hpp"

namespace cpmp {

using OdeField = std::function<Vec(double t, const Vec& y)>;

enum class OdeMethod { RK4, RK45 };

struct OdeOptions {
  OdeMethod method = OdeMethod::RK4;
  double step = 1e-3;      // RK4 base step (shrunk to divide each segment evenly)
  double rel_tol = 1e-8;   // RK45 relative tolerance
  double abs_tol = 1e-10;  // RK45 absolute tolerance
};

// One classical RK4 step from (t, y) with step h.
Vec rk4_step(const OdeField& f, double t, const Vec& y, double h);

// Fixed-step RK4 over [ta, tb] recording every node, endpoints included.
// The step is step = (tb-ta)/ceil((tb-ta)/base) so the grid is uniform and
// lands exactly on tb; tb < ta integrates backward.
void rk4_span(const OdeField& f, double ta, double tb, double base_step, Vec& y,
              const std::function<void(double, const Vec&)>& on_node);

// Dormand-Prince 5(4) adaptive step over [ta, tb]; calls on_node after every
// accepted step.  Throws StepFailure when the step size underflows.
void rk45_span(const OdeField& f, double ta, double tb, double rel_tol, double abs_tol,
               Vec& y, const std::function<void(double, const Vec&)>& on_node);

}  // namespace cpmp
