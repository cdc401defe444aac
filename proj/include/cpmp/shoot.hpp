#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cpmp/prop.hpp"

namespace cpmp {

// Unknowns of the two-point boundary problem: the initial chart costate, the
// terminal time (free-time problems only), and the multipliers c representing
// the terminal costate in the row space of Dg.
struct ShootingUnknowns {
  ChartTarget chart = ChartTarget::normal();
  Vec costate0;               // lambda_0 (normal) or the n-1 free alpha entries (abnormal)
  std::optional<double> t1;   // present iff the terminal time is free
  Vec c;                      // target multipliers, size k

  Vec pack() const;
  static ShootingUnknowns unpack(const Vec& z, const ShootingUnknowns& like);
  ProjectiveCostate initial_costate() const;
};

struct ShootOptions {
  double tol = 1e-8;      // convergence threshold on the residual sup-norm
  int max_iter = 50;
  int max_halvings = 30;  // backtracking line-search depth
  double fd_step = 1e-6;  // relative forward-difference step for the Jacobian
  ContactIntegrationOptions integration;
  MaximizeOptions maximize;
  enum class ChartPolicy { Auto, NormalOnly, AbnormalOnly } chart_policy = ChartPolicy::Auto;
  int multistart = 0;          // >0: add this many deterministic extra starts
  std::vector<Vec> start_grid; // explicit initial-costate starts (overrides multistart)
  unsigned seed = 0;           // seed for the generated start grid
};

struct SolveAttempt {
  Vec start;
  bool converged = false;
  double cost = 0.0;
  double t1 = 0.0;
  double residual_norm = 0.0;
  int iterations = 0;
};

struct ShootingResult {
  bool converged = false;
  std::string classification;  // "normal" or "abnormal"
  ShootingUnknowns unknowns;   // final iterate
  Vec residual;                // final stacked residual
  double residual_norm = 0.0;  // sup-norm
  std::map<std::string, double> residual_blocks;  // target / transversality / free_time
  int iterations = 0;
  std::vector<double> residual_history;
  double t1 = 0.0;
  double cost = 0.0;  // accumulated running cost plus terminal cost
  ExtremalTrajectory trajectory;
  std::map<std::string, double> diagnostics;  // filled by verify_extremal
  std::vector<SolveAttempt> attempts;         // multi-start records
};

// lambda1 - Dg(x1)^T c: zero iff lambda1 is normal to the target at x1.
Vec transversality_residual(const Vec& lambda1, const Vec& x1, const OcpProblem& p, const Vec& c);

// mu1 + dK(x1) - Dg(x1)^T c: the terminal-cost variant in the original
// (unfolded) costate variables.
Vec terminal_cost_transversality_residual(const Vec& mu1, const Vec& x1, const OcpProblem& p,
                                          const Vec& c);

// Terminal-cost chart change on the extended phase: (y0, y, mu) ->
// (y0 + K(y), y, mu + dK(y)), and its base-space inverse direction
// (x0, x) -> (x0 - K(x), x).
void psi_k(const OcpProblem& p, double y0, const Vec& y, const Vec& mu, double& x0, Vec& x,
           Vec& lambda);
void phi_k(const OcpProblem& p, double x0, const Vec& x, double& y0, Vec& y);

// Integrate the maximized contact flow from (0, x0, pc(z)) and stack the
// boundary residual blocks: target g(x1) in R^k, transversality in R^n
// (scaled to the oriented representative so both charts are covered), and the
// vanishing terminal Hamiltonian in R^1 for free-time problems.
Vec shooting_residual(const OcpProblem& p, const ShootingUnknowns& z,
                      const ShootOptions& opts = {}, ContactTrajectory* out_traj = nullptr);

// Damped (Gauss-)Newton on the shooting residual with forward-difference
// Jacobian and backtracking line search.  Abnormal attempts solve the
// overdetermined system in least squares.  Throws NoConvergence with the
// residual history attached when every attempt stalls.
ShootingResult solve(const OcpProblem& p, const ShootingUnknowns& z_init,
                     const ShootOptions& opts = {});

// Recompute certificate quantities along a converged extremal: maximum
// principle defect over a control grid, pairing conservation over a basis of
// initial perturbations, costate-sign convention, transversality, terminal
// and drift defects of the Hamiltonian.
std::map<std::string, double> verify_extremal(const OcpProblem& p, const ShootingResult& result,
                                              const ShootOptions& opts = {});

}  // namespace cpmp
