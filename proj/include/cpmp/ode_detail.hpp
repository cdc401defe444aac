#pragma once

#include "cpmp/ode.hpp"

namespace cpmp {

// One embedded Dormand-Prince 5(4) attempt.  Returns true when the error test
// passes (y_new then holds the 5th-order solution); h_next is the recommended
// next step size either way.
bool rk45_try_step(const OdeField& f, double t, const Vec& y, double h, double rel_tol,
                   double abs_tol, Vec& y_new, double& h_next);

}  // namespace cpmp
