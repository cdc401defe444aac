#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <initializer_list>

#include "cpmp/prop.hpp"

using namespace cpmp;

namespace {

Vec make_vec(std::initializer_list<double> vals) {
  Vec v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}

OcpProblem scalar_growth() {
  OcpProblem p;
  p.name = "growth";
  p.n = 1;
  p.m = 1;
  p.f = [](const Vec& x, const Vec&) { return make_vec({x[0]}); };
  p.L = [](const Vec&, const Vec&) { return 0.0; };
  p.control = BoxControlSet{make_vec({-1.0}), make_vec({1.0})};
  p.x0 = make_vec({1.0});
  return p;
}

OcpProblem double_integrator(double (*running)(const Vec&, const Vec&)) {
  OcpProblem p;
  p.name = "di";
  p.n = 2;
  p.m = 1;
  p.f = [](const Vec& x, const Vec& u) { return make_vec({x[1], u[0]}); };
  p.L = running;
  p.control = BoxControlSet{make_vec({-1.0}), make_vec({1.0})};
  p.x0 = make_vec({0.0, 0.0});
  return p;
}

}  // namespace

TEST_CASE("control signals") {
  SUBCASE("constant") {
    const ControlSignal u = ControlSignal::constant(make_vec({0.7, -2.0}));
    CHECK_FALSE(u.is_piecewise());
    CHECK(u.eval(-3.0).isApprox(make_vec({0.7, -2.0})));
    CHECK(u.eval(17.0).isApprox(make_vec({0.7, -2.0})));
  }

  SUBCASE("closed form") {
    const ControlSignal u = ControlSignal::from_function([](double t) { return make_vec({t * t}); });
    CHECK(u.eval(3.0)[0] == 9.0);
  }

  SUBCASE("piecewise: left-closed segments, last segment closed, clamping") {
    const ControlSignal u = ControlSignal::piecewise_constant(
        {0.0, 1.0, 2.0}, {make_vec({-1.0}), make_vec({1.0})});
    CHECK(u.is_piecewise());
    CHECK(u.eval(0.0)[0] == -1.0);
    CHECK(u.eval(0.999)[0] == -1.0);
    CHECK(u.eval(1.0)[0] == 1.0);   // switch takes effect at the breakpoint
    CHECK(u.eval(2.0)[0] == 1.0);   // closed right end
    CHECK(u.eval(-5.0)[0] == -1.0); // clamped below
    CHECK(u.eval(9.0)[0] == 1.0);   // clamped above
    REQUIRE(u.breakpoints().size() == 3);
    REQUIRE(u.segment_values().size() == 2);
  }

  SUBCASE("piecewise validation") {
    CHECK_THROWS_AS(ControlSignal::piecewise_constant({0.0, 0.0, 1.0},
                                                      {make_vec({1.0}), make_vec({2.0})}),
                    InvalidInput);
    CHECK_THROWS_AS(ControlSignal::piecewise_constant({0.0, 1.0}, {}), InvalidInput);
    CHECK_THROWS_AS(ControlSignal::piecewise_constant({1.0, 0.0},
                                                      {make_vec({1.0})}),
                    InvalidInput);
  }
}

TEST_CASE("trajectory interpolation clamps outside its span") {
  StateTrajectory tr;
  tr.t = {0.0, 1.0, 2.0};
  tr.y = {make_vec({0.0}), make_vec({2.0}), make_vec({6.0})};
  CHECK(tr.at(0.5)[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(tr.at(1.5)[0] == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(tr.at(1.0)[0] == 2.0);
  CHECK(tr.at(-1.0)[0] == 0.0);
  CHECK(tr.at(10.0)[0] == 6.0);
}

TEST_CASE("extended integration reproduces closed-form flows") {
  SUBCASE("exponential growth, zero running cost") {
    const OcpProblem p = scalar_growth();
    const StateTrajectory tr =
        integrate_extended(p, ControlSignal::constant(make_vec({0.0})), 0.0, 1.0, p.x0);
    REQUIRE(tr.size() >= 2);
    CHECK(tr.t.front() == 0.0);
    CHECK(tr.t.back() == 1.0);
    // y = (x0_cost, x); the cost slot stays exactly zero, the state hits e.
    CHECK(tr.y.back()[0] == 0.0);
    CHECK(tr.y.back()[1] == doctest::Approx(std::exp(1.0)).epsilon(1e-11));
  }

  SUBCASE("unit running cost accumulates elapsed time") {
    OcpProblem p = scalar_growth();
    p.L = [](const Vec&, const Vec&) { return 1.0; };
    const StateTrajectory tr =
        integrate_extended(p, ControlSignal::constant(make_vec({0.0})), 0.0, 2.5, p.x0);
    CHECK(tr.y.back()[0] == doctest::Approx(2.5).epsilon(1e-12));
  }

  SUBCASE("bang-bang double integrator is integrated exactly, split at the switch") {
    const OcpProblem p =
        double_integrator(+[](const Vec&, const Vec& u) { return u[0] * u[0]; });
    const ControlSignal u = ControlSignal::piecewise_constant(
        {0.0, 1.0, 2.0}, {make_vec({1.0}), make_vec({-1.0})});
    const StateTrajectory tr = integrate_extended(p, u, 0.0, 2.0, p.x0);

    // Piecewise-quadratic flow: x(1) = (1/2, 1), x(2) = (1, 0); cost = 2.
    CHECK(tr.at(1.0)[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(tr.at(1.0)[2] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tr.y.back()[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(tr.y.back()[2]) < 1e-12);
    CHECK(tr.y.back()[0] == doctest::Approx(2.0).epsilon(1e-12));

    // The segment edge is an exact grid node (no step straddles the switch).
    CHECK(std::find(tr.t.begin(), tr.t.end(), 1.0) != tr.t.end());
  }
}

TEST_CASE("adjoint propagation solves the backward costate equation") {
  SUBCASE("f = -x gives exponential costate growth, cost slot frozen") {
    OcpProblem p = scalar_growth();
    p.f = [](const Vec& x, const Vec&) { return make_vec({-x[0]}); };
    const ControlSignal u = ControlSignal::constant(make_vec({0.0}));
    const StateTrajectory tr = integrate_extended(p, u, 0.0, 1.0, p.x0);

    // nu' = -(df/dx)^T nu = nu, so nu(t) = 2 e^{t-1} from nu(1) = 2.
    const StateTrajectory adj = propagate_adjoint(p, tr, u, make_vec({-1.0, 2.0}));
    REQUIRE(adj.size() == tr.size());
    CHECK(adj.y.back()[1] == 2.0);
    CHECK(adj.y.front()[1] == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-10));
    for (std::size_t i = 0; i < adj.size(); ++i) CHECK(adj.y[i][0] == -1.0);
  }

  SUBCASE("state-dependent running cost forces the costate") {
    OcpProblem p = scalar_growth();
    p.f = [](const Vec&, const Vec& u) { return make_vec({u[0]}); };
    p.L = [](const Vec& x, const Vec&) { return 0.5 * x[0] * x[0]; };
    p.dLdx = [](const Vec& x, const Vec&) { return make_vec({x[0]}); };
    p.x0 = make_vec({3.0});
    const ControlSignal u = ControlSignal::constant(make_vec({0.0}));
    const StateTrajectory tr = integrate_extended(p, u, 0.0, 1.0, p.x0);

    // x stays 3, so nu' = -nu0 dL/dx = 3 and nu(t) = nu1 + 3 (t - 1).
    const StateTrajectory adj = propagate_adjoint(p, tr, u, make_vec({-1.0, 0.5}));
    CHECK(adj.y.front()[1] == doctest::Approx(0.5 - 3.0).epsilon(1e-12));
  }
}

TEST_CASE("tangent propagation solves the forward variational equation") {
  const OcpProblem p = scalar_growth();
  const ControlSignal u = ControlSignal::constant(make_vec({0.0}));
  const StateTrajectory tr = integrate_extended(p, u, 0.0, 1.0, p.x0);

  SUBCASE("state block grows like the flow") {
    const StateTrajectory tan = propagate_tangent(p, tr, u, make_vec({0.5, 1.0}));
    REQUIRE(tan.size() == tr.size());
    CHECK(tan.y.front()[1] == 1.0);
    CHECK(tan.y.back()[1] == doctest::Approx(std::exp(1.0)).epsilon(1e-10));
    // L has no state dependence: the cost-slot variation is frozen.
    CHECK(tan.y.back()[0] == 0.5);
  }

  SUBCASE("running-cost gradient feeds the cost-slot variation") {
    OcpProblem q = p;
    q.L = [](const Vec& x, const Vec&) { return x[0]; };
    q.dLdx = [](const Vec&, const Vec&) { return make_vec({1.0}); };
    const StateTrajectory tr2 = integrate_extended(q, u, 0.0, 1.0, q.x0);
    const StateTrajectory tan = propagate_tangent(q, tr2, u, make_vec({0.0, 1.0}));
    // d/dt dcost = dx = e^t, so dcost(1) = e - 1.
    CHECK(tan.y.back()[0] == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-10));
  }
}

TEST_CASE("adjoint/tangent pairing is a first integral of the paired sweeps") {
  OcpProblem p;
  p.name = "linear3";
  p.n = 3;
  p.m = 1;
  Mat A(3, 3);
  A << 0.1, 1.0, 0.0, -0.5, 0.0, 0.3, 0.0, -0.2, -0.1;
  Mat Q(3, 3);
  Q << 1.0, 0.2, 0.0, 0.2, 0.5, -0.1, 0.0, -0.1, 0.8;
  p.f = [A](const Vec& x, const Vec& u) { return Vec(A * x + Vec::Constant(3, u[0])); };
  p.L = [Q](const Vec& x, const Vec&) { return 0.5 * x.dot(Q * x); };
  p.dfdx = [A](const Vec&, const Vec&) { return A; };
  p.dLdx = [Q](const Vec& x, const Vec&) { return Vec(Q * x); };
  p.control = BoxControlSet{make_vec({-1.0}), make_vec({1.0})};
  p.x0 = make_vec({1.0, -0.5, 0.25});

  const ControlSignal u = ControlSignal::constant(make_vec({0.3}));
  const StateTrajectory tr = integrate_extended(p, u, 0.0, 1.0, p.x0);
  const StateTrajectory adj = propagate_adjoint(p, tr, u, make_vec({-1.0, 0.4, -0.7, 0.9}));

  double worst = 0.0;
  for (int k = 0; k < 4; ++k) {
    Vec e = Vec::Zero(4);
    e[k] = 1.0;
    const StateTrajectory tan = propagate_tangent(p, tr, u, e);
    worst = std::max(worst, pairing_defect(adj, tan));
  }
  CHECK(worst < 1e-9);

  SUBCASE("mismatched grids are rejected") {
    StateTrajectory clipped = adj;
    clipped.t.pop_back();
    clipped.y.pop_back();
    const StateTrajectory tan = propagate_tangent(p, tr, u, Vec::Unit(4, 0));
    CHECK_THROWS_AS(pairing_defect(clipped, tan), GridMismatch);
  }
}

TEST_CASE("sampled extremal controls replay as a piecewise signal") {
  ExtremalTrajectory tr;
  auto sample = [](double t, double uval) {
    return ExtremalSample{t, ExtendedState(0.0, Vec::Zero(1)),
                          ProjectiveCostate::normal(Vec::Ones(1)), Vec::Constant(1, uval), 0.0};
  };
  // Duplicate node at the switch time carries pre- and post-switch controls.
  tr.samples = {sample(0.0, 1.0), sample(0.5, 1.0), sample(0.5, -1.0), sample(1.0, -1.0)};
  tr.control_switch_times = {0.5};

  const ControlSignal u = to_control_signal(tr);
  REQUIRE(u.is_piecewise());
  CHECK(u.eval(0.25)[0] == 1.0);
  CHECK(u.eval(0.5)[0] == -1.0);  // post-switch value wins at the node
  CHECK(u.eval(0.75)[0] == -1.0);
  CHECK(u.breakpoints().front() == 0.0);
  CHECK(u.breakpoints().back() == 1.0);
}
