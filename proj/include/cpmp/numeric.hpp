#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>

#include "cpmp/errors.hpp"

namespace cpmp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Step size for central differences: cbrt(eps) scaled by coordinate magnitude.
inline double fd_step(double coord) {
  static const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  return base * std::max(1.0, std::abs(coord));
}

// Central-difference gradient of a scalar function of a vector.
inline Vec central_gradient(const std::function<double(const Vec&)>& f, const Vec& x) {
  Vec g(x.size());
  Vec xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = fd_step(x[i]);
    const double xi = x[i];
    xp[i] = xi + h;
    const double fp = f(xp);
    xp[i] = xi - h;
    const double fm = f(xp);
    xp[i] = xi;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw DerivativeFailure("non-finite value in central difference");
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline double central_partial(const std::function<double(double)>& f, double x) {
  const double h = fd_step(x);
  const double fp = f(x + h), fm = f(x - h);
  if (!std::isfinite(fp) || !std::isfinite(fm))
    throw DerivativeFailure("non-finite value in central difference");
  return (fp - fm) / (2.0 * h);
}

// Central difference of a vector-valued map with respect to coordinate i.
inline Vec central_partial(const std::function<Vec(const Vec&)>& f, const Vec& x,
                           Eigen::Index i) {
  const double h = fd_step(x[i]);
  Vec xp = x;
  xp[i] = x[i] + h;
  const Vec fp = f(xp);
  xp[i] = x[i] - h;
  const Vec fm = f(xp);
  if (!fp.allFinite() || !fm.allFinite())
    throw DerivativeFailure("non-finite value in central difference");
  return (fp - fm) / (2.0 * h);
}

// Deterministic RNG used by the verification suites.  Uniform deviates are
// derived from the top 53 bits of the xorshift-mixed state so the stream does
// not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : s_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  std::uint64_t next_u64() {
    // splitmix64
    std::uint64_t z = (s_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (always consumes two deviates).
  double normal() {
    const double u1 = std::max(uniform(), 0x1.0p-60);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  Vec uniform_vec(Eigen::Index n, double lo, double hi) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }

  Vec normal_vec(Eigen::Index n) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  int index(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

 private:
  std::uint64_t s_;
};

// Fixed-width float formatting shared by every data-file writer; having one
// code path keeps repeated runs byte-identical.
std::string format_double(double v);

}  // namespace cpmp
