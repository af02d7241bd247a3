#pragma once

#include <limits>
#include <vector>

#include "arcshoot/arc_structure.hpp"
#include "arcshoot/problem.hpp"
#include "arcshoot/types.hpp"

namespace arcshoot {

/// Counters filled while evaluating arc controls. A Legendre-Clebsch sign
/// failure is not fatal; it is recorded here and surfaced in reports.
struct ControlDiagnostics {
  int legendre_clebsch_violations = 0;
  /// Largest value of p [[f1,f0],f1](x) seen on singular arcs (should be < 0).
  double worst_legendre_clebsch = -std::numeric_limits<double>::infinity();

  void merge(const ControlDiagnostics& other);
};

/// Control rule on one arc: the bound on bang arcs, Gamma(x) on constrained
/// arcs, and -p[[f1,f0],f0] / p[[f1,f0],f1] on singular arcs.
double arc_control(const ProblemDef& p, ArcKind kind, const Vector& x, const Covector& costate,
                   ControlDiagnostics* diag = nullptr);

/// Guard for the singular-control denominator: 1e-10 (1 + |p| |[[f1,f0],f1](x)|).
double singular_guard(const Covector& costate, const Vector& bracket);

struct ArcDerivative {
  Vector dx;
  Covector dp;
};

/// Right-hand side of the rescaled state/costate system on one arc:
///   dx/ds = dt (f0 + w f1),   dp/ds = -dt D_x H^k.
/// On constrained arcs D_x H^k carries the (p f1) Gamma'(x) term; on singular
/// arcs the control is held fixed when differentiating.
ArcDerivative arc_rhs(const ProblemDef& p, ArcKind kind, double dt, const Vector& x,
                      const Covector& costate, ControlDiagnostics* diag = nullptr);

/// H^k = p (f0(x) + w f1(x)).
double arc_hamiltonian(const ProblemDef& p, ArcKind kind, const Vector& x,
                       const Covector& costate);

/// Density of the state-constraint measure on a constrained arc,
/// nu = p [f1,f0](x) / (g'(x) f1(x)). Complementarity requires nu >= 0.
double constraint_multiplier_density(const ProblemDef& p, const Vector& x,
                                     const Covector& costate);

/// One arc on the normalized grid s_i = i / M.
struct ArcGrid {
  int index = 0;  ///< 0-based arc index
  ArcKind kind = ArcKind::Singular;
  double t_begin = 0.0;
  double t_end = 0.0;
  std::vector<double> s;
  std::vector<Vector> x;
  std::vector<Covector> p;
  std::vector<double> w;  ///< control rule output at each node
  ControlDiagnostics diagnostics;

  int steps() const { return static_cast<int>(s.size()) - 1; }
  double dt() const { return t_end - t_begin; }
  /// Original time of node i.
  double time(int i) const { return t_begin + (t_end - t_begin) * s[i]; }
};

/// Classical RK4 with step 1/M on the coupled 2n system. The returned grid
/// has M + 1 nodes including both ends.
ArcGrid propagate_arc(const ProblemDef& p, ArcKind kind, double dt, const Vector& x0,
                      const Covector& p0, int steps);

/// All arcs of a shooting evaluation, laid end to end.
struct TPTrajectory {
  std::vector<ArcGrid> arcs;
  std::vector<double> tau;  ///< interior switching times

  int steps_per_arc() const { return arcs.empty() ? 0 : arcs.front().steps(); }
};

}  // namespace arcshoot
