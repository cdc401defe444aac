#include <doctest.h>

#include <cmath>
#include <initializer_list>
#include <limits>

#include "cpmp/ocp.hpp"

using namespace cpmp;

namespace {

Vec make_vec(std::initializer_list<double> vals) {
  Vec v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}

// Double-integrator dynamics with a quadratic control penalty on a box:
// f = (x2, u), L = 1 + u^2, U = [-1, 1].
OcpProblem quad_problem() {
  OcpProblem p;
  p.name = "quad";
  p.n = 2;
  p.m = 1;
  p.f = [](const Vec& x, const Vec& u) { return make_vec({x[1], u[0]}); };
  p.L = [](const Vec&, const Vec& u) { return 1.0 + u[0] * u[0]; };
  p.control = BoxControlSet{make_vec({-1.0}), make_vec({1.0})};
  p.x0 = make_vec({2.0, -1.0});
  p.target = target_point(make_vec({0.0, 0.0}));
  return p;
}

}  // namespace

TEST_CASE("extended dynamics stack the running cost on top of the state equations") {
  const OcpProblem p = quad_problem();
  const auto fhat = extend_system(p);
  const ExtendedState xhat(3.0, make_vec({2.0, -1.0}));
  const Vec v = fhat(xhat, make_vec({0.5}));
  REQUIRE(v.size() == 3);
  CHECK(v[0] == doctest::Approx(1.25).epsilon(1e-15));   // L = 1 + 0.25
  CHECK(v[1] == doctest::Approx(-1.0).epsilon(1e-15));   // x2
  CHECK(v[2] == doctest::Approx(0.5).epsilon(1e-15));    // u

  // The accumulated-cost slot never feeds back into the field.
  const ExtendedState other(-7.0, make_vec({2.0, -1.0}));
  CHECK((fhat(other, make_vec({0.5})) - v).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("pre-maximization Hamiltonian pairs the costate with the augmented field") {
  const OcpProblem p = quad_problem();
  const ExtendedState xhat(0.0, make_vec({2.0, -1.0}));
  const Vec nuhat = make_vec({-1.0, 0.5, 1.0});
  const Vec u = make_vec({0.5});

  // -1*1.25 + 0.5*(-1) + 1*0.5
  CHECK(control_hamiltonian(p, xhat, nuhat, u) == doctest::Approx(-1.25).epsilon(1e-15));

  SUBCASE("degree-1 homogeneity in the costate") {
    const double h = control_hamiltonian(p, xhat, nuhat, u);
    for (double s : {3.7, -2.0, 1e-6, 4096.0}) {
      CHECK(control_hamiltonian(p, xhat, Vec(s * nuhat), u) ==
            doctest::Approx(s * h).epsilon(1e-13));
    }
  }

  SUBCASE("rejects malformed arguments") {
    CHECK_THROWS_AS(control_hamiltonian(p, xhat, make_vec({-1.0, 0.5}), u), InvalidInput);
    CHECK_THROWS_AS(control_hamiltonian(p, xhat, nuhat, make_vec({2.0})), ControlOutOfSet);
  }
}

TEST_CASE("control set membership") {
  const BoxControlSet box{make_vec({-1.0, 0.0}), make_vec({1.0, 2.0})};
  CHECK_NOTHROW(require_in_control_set(box, make_vec({1.0, 0.0})));  // boundary is inside
  CHECK_NOTHROW(require_in_control_set(box, make_vec({0.3, 1.7})));
  CHECK_THROWS_AS(require_in_control_set(box, make_vec({1.0 + 1e-9, 0.0})), ControlOutOfSet);
  CHECK_THROWS_AS(require_in_control_set(box, make_vec({0.0})), ControlOutOfSet);

  const FiniteControlSet fin{{make_vec({-1.0}), make_vec({1.0})}};
  CHECK_NOTHROW(require_in_control_set(fin, make_vec({-1.0})));
  CHECK_THROWS_AS(require_in_control_set(fin, make_vec({0.999999})), ControlOutOfSet);
}

TEST_CASE("chart form of the pairing at the oriented representative") {
  const OcpProblem p = quad_problem();
  const ExtendedState xhat(0.0, make_vec({2.0, -1.0}));
  const Vec u = make_vec({0.5});

  // Normal chart, representative (-1, lambda): lambda.f - L.
  const auto pc = ProjectiveCostate::normal(make_vec({0.5, 1.0}));
  CHECK(contact_control_hamiltonian(p, xhat, pc, u) == doctest::Approx(-1.25).epsilon(1e-15));

  // Abnormal locus, representative (0, alpha): alpha.f, no running-cost term.
  const auto ab = ProjectiveCostate::abnormal(1, make_vec({1.0, -2.0}));
  CHECK(contact_control_hamiltonian(p, xhat, ab, u) == doctest::Approx(-2.0).epsilon(1e-15));
}

TEST_CASE("box maximization hits interior grid points exactly") {
  OcpProblem p = quad_problem();
  p.L = [](const Vec&, const Vec& u) { return u[0] * u[0]; };
  const Vec x = make_vec({0.0, 0.0});

  // score(u) = -u^2 + u, maximum at u = 0.5, which the 33-point grid on
  // [-1, 1] contains exactly (0.5 = -1 + 24/16).
  const ControlChoice c = maximize_direction(p, x, make_vec({-1.0, 0.0, 1.0}));
  CHECK(c.u[0] == 0.5);
  CHECK(c.value == 0.25);

  // score(u) = -u^2 + 3u is increasing on the box: vertex maximizer.
  const ControlChoice v = maximize_direction(p, x, make_vec({-1.0, 0.0, 3.0}));
  CHECK(v.u[0] == 1.0);
  CHECK(v.value == 2.0);
}

TEST_CASE("box maximization refines off-grid maximizers") {
  OcpProblem p = quad_problem();
  p.L = [](const Vec&, const Vec& u) { return (u[0] - 0.3) * (u[0] - 0.3); };
  // score(u) = -(u - 0.3)^2; 0.3 is not a 33-grid node.
  const ControlChoice c = maximize_direction(p, make_vec({0.0, 0.0}), make_vec({-1.0, 0.0, 0.0}));
  CHECK(std::abs(c.u[0] - 0.3) < 1e-3);
  CHECK(std::abs(c.value) < 1e-6);
}

TEST_CASE("bang-bang maximization picks the sign of the velocity costate") {
  OcpProblem p = quad_problem();
  p.L = [](const Vec&, const Vec&) { return 1.0; };  // min-time running cost
  const Vec x = make_vec({0.0, 0.0});
  CHECK(maximize_direction(p, x, make_vec({-1.0, 0.0, -0.5})).u[0] == -1.0);
  CHECK(maximize_direction(p, x, make_vec({-1.0, 0.0, 0.7})).u[0] == 1.0);
}

TEST_CASE("analytic maximizer is used in the normal cone and matches the grid") {
  OcpProblem p = quad_problem();
  p.L = [](const Vec&, const Vec& u) { return u[0] * u[0]; };
  OcpProblem with_argmax = p;
  // max over u of lambda2 u - u^2 is at u = lambda2 / 2, clamped to the box.
  with_argmax.argmax = [](const Vec&, const Vec& lambda) {
    return make_vec({std::clamp(lambda[1] / 2.0, -1.0, 1.0)});
  };

  const Vec x = make_vec({0.4, -0.2});
  for (double l2 : {-1.7, -0.43, 0.0, 0.31, 1.9}) {
    const Vec nuhat = make_vec({-2.0, 0.8, -2.0 * -(l2)});  // lambda2 = l2 after scaling
    const ControlChoice a = maximize_direction(with_argmax, x, nuhat);
    const ControlChoice g = maximize_direction(p, x, nuhat);
    CHECK(a.u[0] == doctest::Approx(std::clamp(l2 / 2.0, -1.0, 1.0)).epsilon(1e-12));
    CHECK(a.value == doctest::Approx(g.value).epsilon(1e-6));
  }

  // On the abnormal locus (nu0 = 0) the analytic maximizer does not apply;
  // the grid search still runs: score = nu2 u.
  const ControlChoice ab = maximize_direction(with_argmax, x, make_vec({0.0, 0.0, 1.0}));
  CHECK(ab.u[0] == 1.0);
}

TEST_CASE("finite sets are enumerated exactly with first-wins tie-break") {
  OcpProblem p = quad_problem();
  p.L = [](const Vec&, const Vec& u) { return u[0] * u[0]; };
  p.control = FiniteControlSet{{make_vec({-1.0}), make_vec({0.25}), make_vec({1.0})}};

  // score(u) = -u^2 + 0.5u: values -1.5, 0.0625, -0.5.
  const ControlChoice c = maximize_direction(p, make_vec({0.0, 0.0}), make_vec({-1.0, 0.0, 0.5}));
  CHECK(c.u[0] == 0.25);
  CHECK(c.value == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(c.signature == 1);

  // A score that ignores the control ties everywhere: the first listed
  // point must win deterministically.
  p.control = FiniteControlSet{{make_vec({0.7}), make_vec({-0.3})}};
  const ControlChoice tie = maximize_direction(p, make_vec({0.0, 4.0}), make_vec({0.0, 1.0, 0.0}));
  CHECK(tie.u[0] == 0.7);
  CHECK(tie.signature == 0);
}

TEST_CASE("maximization reports failure when the objective is nowhere finite") {
  OcpProblem p = quad_problem();
  p.L = [](const Vec&, const Vec&) { return std::numeric_limits<double>::quiet_NaN(); };
  CHECK_THROWS_AS(maximize_direction(p, make_vec({0.0, 0.0}), make_vec({-1.0, 0.0, 0.0})),
                  EvaluationFailure);
}

TEST_CASE("maximization at a projective costate evaluates the representative") {
  OcpProblem p = quad_problem();
  p.L = [](const Vec&, const Vec& u) { return u[0] * u[0]; };
  const ExtendedState xhat(0.0, make_vec({0.0, 0.0}));
  const auto pc = ProjectiveCostate::normal(make_vec({0.0, 1.0}));

  const ControlChoice c = maximize_control(p, xhat, pc);
  const ControlChoice d = maximize_direction(p, xhat.x, make_vec({-1.0, 0.0, 1.0}));
  CHECK(c.u[0] == d.u[0]);
  CHECK(c.value == d.value);
  CHECK(optimal_contact_hamiltonian(p, xhat, pc) == c.value);
}

TEST_CASE("control grids enumerate boxes lexicographically, first axis most significant") {
  const BoxControlSet box{make_vec({0.0, 0.0}), make_vec({1.0, 10.0})};
  const auto grid = control_grid(box, 3);
  REQUIRE(grid.size() == 9);
  CHECK(grid[0].isApprox(make_vec({0.0, 0.0})));
  CHECK(grid[1].isApprox(make_vec({0.0, 5.0})));
  CHECK(grid[2].isApprox(make_vec({0.0, 10.0})));
  CHECK(grid[3].isApprox(make_vec({0.5, 0.0})));
  CHECK(grid[8].isApprox(make_vec({1.0, 10.0})));

  // 33 nodes on [-1, 1] include both endpoints and the dyadic interior point.
  const auto line = control_grid(BoxControlSet{make_vec({-1.0}), make_vec({1.0})}, 33);
  REQUIRE(line.size() == 33);
  CHECK(line.front()[0] == -1.0);
  CHECK(line.back()[0] == 1.0);
  CHECK(line[24][0] == 0.5);

  // Finite sets pass through untouched; degenerate boxes collapse.
  const FiniteControlSet fin{{make_vec({3.0}), make_vec({-3.0})}};
  const auto pts = control_grid(fin, 99);
  REQUIRE(pts.size() == 2);
  CHECK(pts[0][0] == 3.0);

  const auto flat = control_grid(BoxControlSet{make_vec({2.0}), make_vec({2.0})}, 5);
  for (const Vec& u : flat) CHECK(u[0] == 2.0);

  CHECK_THROWS_AS(control_grid(box, 0), InvalidInput);
}

TEST_CASE("folding the terminal cost shifts the running cost and the maximizer") {
  OcpProblem p;
  p.name = "scalar";
  p.n = 1;
  p.m = 1;
  p.f = [](const Vec&, const Vec& u) { return make_vec({u[0]}); };
  p.L = [](const Vec&, const Vec& u) { return 0.5 * u[0] * u[0]; };
  p.dLdx = [](const Vec&, const Vec&) { return make_vec({0.0}); };
  p.dfdx = [](const Vec&, const Vec&) { return Mat::Zero(1, 1); };
  p.control = BoxControlSet{make_vec({-10.0}), make_vec({10.0})};
  p.x0 = make_vec({1.0});
  TerminalCost tc;
  tc.K = [](const Vec& x) { return 0.5 * x[0] * x[0]; };
  tc.dK = [](const Vec& x) { return make_vec({x[0]}); };
  tc.d2K = [](const Vec&) { return Mat::Identity(1, 1); };
  p.terminal_cost = tc;
  p.argmax = [](const Vec&, const Vec& lambda) {
    return make_vec({std::clamp(lambda[0], -10.0, 10.0)});
  };

  const OcpProblem q = fold_terminal_cost(p);
  CHECK(q.name == "scalar_folded");
  CHECK_FALSE(q.terminal_cost.has_value());

  // Lfold = L + dK.f = u^2/2 + x u.
  const Vec x = make_vec({2.0});
  const Vec u = make_vec({0.3});
  CHECK(q.L(x, u) == doctest::Approx(0.5 * 0.09 + 0.6).epsilon(1e-15));
  CHECK(q.grad_L_x(x, u)[0] == doctest::Approx(0.3).epsilon(1e-12));

  // The folded maximizer sees the costate shifted by -dK: at mu = 3 over
  // x = 2 it must agree with the original maximizer at lambda = 1.
  REQUIRE(q.argmax);
  CHECK(q.argmax(x, make_vec({3.0}))[0] == doctest::Approx(1.0).epsilon(1e-15));

  OcpProblem bare = p;
  bare.terminal_cost.reset();
  CHECK_THROWS_AS(fold_terminal_cost(bare), InvalidInput);
}

TEST_CASE("maximized contact Hamiltonian: envelope partials and homogeneous extension") {
  OcpProblem p;
  p.name = "smooth";
  p.n = 2;
  p.m = 1;
  p.f = [](const Vec& x, const Vec& u) {
    return make_vec({x[1] + 0.3 * std::sin(x[0]), u[0] - 0.2 * x[1] * x[1]});
  };
  p.L = [](const Vec& x, const Vec& u) { return u[0] * u[0] + 0.1 * x[0] * x[0]; };
  p.control = BoxControlSet{make_vec({-2.0}), make_vec({2.0})};
  p.x0 = make_vec({0.0, 0.0});
  // Interior maximizer of lambda2 u - u^2 so the value function is smooth.
  p.argmax = [](const Vec&, const Vec& lambda) {
    return make_vec({std::clamp(lambda[1] / 2.0, -2.0, 2.0)});
  };

  const ContactHamiltonian h = optimal_hamiltonian(p);
  const Vec x = make_vec({0.7, -0.4});
  const Vec lambda = make_vec({1.1, 0.6});

  const double val = h.value(0.0, x, lambda);
  const ControlChoice c = maximize_direction(p, x, make_vec({-1.0, lambda[0], lambda[1]}));
  CHECK(val == doctest::Approx(c.value).epsilon(1e-12));

  SUBCASE("partials match central differences of the maximized value") {
    const double fd_step = 1e-6;
    const Vec dx = h.d_x(0.0, x, lambda);
    const Vec dl = h.d_lambda(0.0, x, lambda);
    for (int i = 0; i < 2; ++i) {
      Vec xp = x, xm = x;
      xp[i] += fd_step;
      xm[i] -= fd_step;
      const double fd = (h.value(0.0, xp, lambda) - h.value(0.0, xm, lambda)) / (2.0 * fd_step);
      CHECK(dx[i] == doctest::Approx(fd).epsilon(1e-5));

      Vec lp = lambda, lm = lambda;
      lp[i] += fd_step;
      lm[i] -= fd_step;
      const double fl = (h.value(0.0, x, lp) - h.value(0.0, x, lm)) / (2.0 * fd_step);
      CHECK(dl[i] == doctest::Approx(fl).epsilon(1e-5));
    }
    // The maximized Hamiltonian never depends on accumulated cost.
    CHECK(h.d_x0(0.0, x, lambda) == 0.0);
  }

  SUBCASE("homogeneous extension agrees with the chart value at the representative") {
    REQUIRE(h.homogeneous);
    const Vec xhat = make_vec({0.25, x[0], x[1]});
    const Vec nuhat = make_vec({-1.0, lambda[0], lambda[1]});
    CHECK(h.homogeneous->eval(xhat, nuhat) == doctest::Approx(val).epsilon(1e-12));
    // Degree-1 homogeneity under positive rescaling.
    CHECK(h.homogeneous->eval(xhat, Vec(2.5 * nuhat)) ==
          doctest::Approx(2.5 * val).epsilon(1e-11));
  }

  SUBCASE("pinned-control Hamiltonian matches the maximized one at the maximizer") {
    REQUIRE(h.fixed_control);
    const Vec ustar = c.u;
    const ContactHamiltonian hu = h.fixed_control(ustar);
    CHECK(hu.value(0.0, x, lambda) == doctest::Approx(val).epsilon(1e-12));
    // At any other control the pinned value can only be smaller.
    const ContactHamiltonian hother = h.fixed_control(make_vec({-1.5}));
    CHECK(hother.value(0.0, x, lambda) < val);
  }

  SUBCASE("control witness and signature expose the maximizer") {
    REQUIRE(h.control_witness);
    REQUIRE(h.control_signature);
    const ContactState s(ExtendedState(0.0, x), ProjectiveCostate::normal(lambda));
    CHECK(h.control_witness(s)[0] == doctest::Approx(c.u[0]).epsilon(1e-12));
    CHECK(h.control_signature(s) == c.signature);
  }
}

TEST_CASE("target builders") {
  SUBCASE("point target pins every coordinate") {
    const TargetConstraint t = target_point(make_vec({1.0, -2.0}));
    CHECK(t.k == 2);
    const Vec g = t.g(make_vec({1.5, -2.0}));
    CHECK(g[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(g[1] == 0.0);
    CHECK(t.Dg(make_vec({0.0, 0.0})).isApprox(Mat::Identity(2, 2)));
  }

  SUBCASE("coordinate target pins a subset") {
    const TargetConstraint t = target_coordinates({2}, make_vec({0.5}), 3);
    CHECK(t.k == 1);
    CHECK(t.g(make_vec({9.0, 0.5, 7.0}))[0] == 0.0);
    CHECK(t.g(make_vec({9.0, 2.5, 7.0}))[0] == doctest::Approx(2.0).epsilon(1e-15));
    const Mat D = t.Dg(make_vec({0.0, 0.0, 0.0}));
    CHECK(D(0, 0) == 0.0);
    CHECK(D(0, 1) == 1.0);
    CHECK(D(0, 2) == 0.0);
  }
}

TEST_CASE("problem validation rejects malformed definitions") {
  OcpProblem good = quad_problem();
  CHECK_NOTHROW(good.validate());

  OcpProblem p = good;
  p.x0 = make_vec({1.0});
  CHECK_THROWS_AS(p.validate(), InvalidInput);

  p = good;
  p.f = nullptr;
  CHECK_THROWS_AS(p.validate(), InvalidInput);

  p = good;
  p.f = [](const Vec& x, const Vec&) { return x.head(1).eval(); };
  CHECK_THROWS_AS(p.validate(), InvalidInput);

  p = good;
  p.control = BoxControlSet{make_vec({1.0}), make_vec({-1.0})};  // lo > hi
  CHECK_THROWS_AS(p.validate(), InvalidInput);

  p = good;
  p.control = FiniteControlSet{{}};
  CHECK_THROWS_AS(p.validate(), InvalidInput);

  p = good;
  p.L = [](const Vec&, const Vec&) { return std::numeric_limits<double>::infinity(); };
  CHECK_THROWS_AS(p.validate(), InvalidInput);

  p = good;
  p.time = TimeMode::fixed(-1.0);  // before t0 = 0
  CHECK_THROWS_AS(p.validate(), InvalidInput);

  p = good;
  REQUIRE(p.target);
  p.target->k = 5;  // exceeds n
  CHECK_THROWS_AS(p.validate(), InvalidInput);
}
