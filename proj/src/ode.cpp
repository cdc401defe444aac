#include "cpmp/ode.hpp"

#include <cmath>

#include "cpmp/ode_detail.hpp"

namespace cpmp {

Vec rk4_step(const OdeField& f, double t, const Vec& y, double h) {
  const Vec k1 = f(t, y);
  const Vec k2 = f(t + 0.5 * h, y + (0.5 * h) * k1);
  const Vec k3 = f(t + 0.5 * h, y + (0.5 * h) * k2);
  const Vec k4 = f(t + h, y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void rk4_span(const OdeField& f, double ta, double tb, double base_step, Vec& y,
              const std::function<void(double, const Vec&)>& on_node) {
  const double len = tb - ta;
  if (len == 0.0) return;
  if (base_step <= 0.0) throw InvalidInput("step must be positive");
  const long count = std::max(1L, static_cast<long>(std::ceil(std::abs(len) / base_step - 1e-12)));
  const double h = len / static_cast<double>(count);
  for (long k = 0; k < count; ++k) {
    const double t = ta + h * static_cast<double>(k);
    y = rk4_step(f, t, y, h);
    if (!y.allFinite()) throw StepFailure("non-finite state during RK4 integration");
    const double tn = (k + 1 == count) ? tb : ta + h * static_cast<double>(k + 1);
    if (on_node) on_node(tn, y);
  }
}

namespace {

// Dormand-Prince coefficients (RK5(4)7M).
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// 4th-order embedded weights.
constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                 e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

}  // namespace

bool rk45_try_step(const OdeField& f, double t, const Vec& y, double h, double rel_tol,
                   double abs_tol, Vec& y_new, double& h_next) {
  const Vec k1 = f(t, y);
  const Vec k2 = f(t + c2 * h, y + h * (a21 * k1));
  const Vec k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
  const Vec k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
  const Vec k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
  const Vec k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
  const Vec y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  if (!y5.allFinite()) {
    h_next = 0.5 * h;
    return false;
  }
  const Vec k7 = f(t + h, y5);
  const Vec y4 = y + h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
  double err = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double scale = abs_tol + rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
    err = std::max(err, std::abs(y5[i] - y4[i]) / scale);
  }
  if (err <= 1.0) {
    y_new = y5;
    const double grow = err == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(err, -0.2));
    h_next = h * grow;
    return true;
  }
  h_next = h * std::max(0.2, 0.9 * std::pow(err, -0.2));
  return false;
}

void rk45_span(const OdeField& f, double ta, double tb, double rel_tol, double abs_tol,
               Vec& y, const std::function<void(double, const Vec&)>& on_node) {
  const double len = tb - ta;
  if (len == 0.0) return;
  const double dir = len > 0 ? 1.0 : -1.0;
  double t = ta;
  double h = dir * std::min(std::abs(len), 1e-2);
  const double h_min = 1e-14 * std::abs(len);
  Vec y_new(y.size());
  while (dir * (tb - t) > 0.0) {
    if (std::abs(h) > std::abs(tb - t)) h = tb - t;
    double h_next = h;
    if (rk45_try_step(f, t, y, h, rel_tol, abs_tol, y_new, h_next)) {
      t += h;
      y = y_new;
      if (on_node) on_node(t, y);
    }
    h = h_next;
    if (std::abs(h) < h_min) throw StepFailure("step underflow in RK45");
  }
}

}  // namespace cpmp
