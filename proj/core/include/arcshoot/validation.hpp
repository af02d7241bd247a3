#pragma once

#include <limits>
#include <string>
#include <vector>

#include "arcshoot/arc_structure.hpp"
#include "arcshoot/problem.hpp"
#include "arcshoot/tp_dynamics.hpp"

namespace arcshoot {

struct ValidationOptions {
  /// Required distance of the control from the bounds on C and S arcs.
  double min_margin = 1e-6;
  /// A CS or SC junction must move the control by more than this.
  double min_jump = 1e-6;
  double tol_g = 1e-6;
  double tol_nu = 1e-8;
  double tol_hamiltonian = 1e-6;
};

struct JunctionReport {
  int junction = 0;  ///< between arcs `junction` and `junction + 1` (0-based)
  double control_jump = 0.0;
  double hamiltonian_mismatch = 0.0;
};

/// Checks of a converged extremal against the structural hypotheses.
/// Failing checks are findings, listed in `findings`; nothing throws.
struct ValidationReport {
  double control_margin = std::numeric_limits<double>::infinity();  ///< over C and S arcs
  std::vector<JunctionReport> junctions;
  FirstOrderReport first_order;
  ControlDiagnostics legendre_clebsch;
  double nu_min = std::numeric_limits<double>::infinity();  ///< over C arcs
  double g_max = -std::numeric_limits<double>::infinity();  ///< over all nodes
  std::vector<double> hamiltonian_variation;                ///< max - min of H^k per arc
  std::vector<std::string> findings;

  bool pass() const { return findings.empty(); }
};

ValidationReport validate_solution(const ProblemDef& p, const ArcStructure& s,
                                   const TPTrajectory& traj, const ValidationOptions& options = {});

}  // namespace arcshoot
