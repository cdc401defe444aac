#pragma once

#include <string>
#include <vector>

#include "cpmp/numeric.hpp"

namespace cpmp {

struct CheckResult {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  bool lower_is_pass = true;  // pass iff measured <= bound; otherwise >= bound
  bool pass = false;
};

// Degree-1 homogeneity of the pre-maximization Hamiltonian on random
// problems, states, costates, controls and scalings.
CheckResult check_homogeneity(int trials, unsigned seed);

// Pairing conservation between tangent and adjoint propagation on random
// linear systems with quadratic running cost: the ensemble defect (max over
// systems) at the given step, and its reduction ratio when the step is
// halved (fourth-order propagation gives ~16).
std::vector<CheckResult> check_pairing(int systems, double step, unsigned seed);

// Chart atlas: round-trip conversion accuracy on random costates, and
// projective continuity across automatic chart switches on a flow that is
// driven through the abnormal locus.
std::vector<CheckResult> check_chart_atlas(int trials, unsigned seed);

// Charted contact flow against the projectivized symplectic flow of the
// homogeneous lift on random problems; `abnormal_runs` of them start exactly
// on the abnormal locus.
CheckResult check_contact_symplectic(int problems, int abnormal_runs, unsigned seed);

// Round trip of the terminal-cost transformation and its inverse on random
// triples with random quadratic terminal costs.
CheckResult check_psi_roundtrip(int trials, unsigned seed);

// Named suites for the command-line `verify` subcommand ("homogeneity",
// "pairing", "chart", "contact_symplectic", "psi_k", "all"), run with the
// fixed default sample counts and seeds.
std::vector<std::string> verify_suites();
std::vector<CheckResult> verify_suite(const std::string& name);

}  // namespace cpmp
