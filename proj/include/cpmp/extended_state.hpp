#pragma once

#include "cpmp/numeric.hpp"

namespace cpmp {

// State of the cost-augmented system: x0 accumulates running cost, x is the
// base state.  Kept separate from Vec so the cost slot cannot be confused
// with a state coordinate.
struct ExtendedState {
  double x0 = 0.0;
  Vec x;

  ExtendedState() = default;
  ExtendedState(double c, Vec state) : x0(c), x(std::move(state)) {}

  Eigen::Index n() const { return x.size(); }

  Vec flat() const {
    Vec v(x.size() + 1);
    v[0] = x0;
    v.tail(x.size()) = x;
    return v;
  }

  static ExtendedState from_flat(const Vec& v) {
    return ExtendedState(v[0], v.tail(v.size() - 1));
  }
};

}  // namespace cpmp
