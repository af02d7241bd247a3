#pragma once

#include <vector>

#include "arcshoot/arc_structure.hpp"
#include "arcshoot/gauss_newton.hpp"
#include "arcshoot/problem.hpp"
#include "arcshoot/tp_dynamics.hpp"
#include "arcshoot/types.hpp"

namespace arcshoot {

/// Sizes of the shooting unknowns and residual for a problem/structure pair.
struct ShootingLayout {
  int arcs = 0;         ///< N
  int n = 0;            ///< state dimension
  int q = 0;            ///< endpoint constraints
  int constrained = 0;  ///< |I(C)|
  int singular = 0;     ///< |I(S)|

  static ShootingLayout of(const ProblemDef& p, const ArcStructure& s);

  /// 2Nn + (N-1) + q + |I(C)|
  int unknowns() const { return 2 * arcs * n + (arcs - 1) + q + constrained; }
  /// unknowns() + 2 |I(S)|
  int equations() const { return unknowns() + 2 * singular; }
};

/// Shooting unknowns. The flat packing order is fixed:
///   x0^1..x0^N, tau_1..tau_{N-1}, p0^1..p0^N, Psi, gamma (one per C arc).
struct ShootingVector {
  std::vector<Vector> x0;
  std::vector<double> tau;
  std::vector<Covector> p0;
  Covector psi;
  Vector gamma;

  Vector pack() const;
  static ShootingVector unpack(const Vector& flat, const ShootingLayout& layout);
};

/// Propagates every arc from (x0^k, p0^k) with dt_k = tau_k - tau_{k-1}.
/// Throws PropagationError naming the arc, or ConfigurationError when tau is
/// not strictly increasing inside (0, T).
TPTrajectory propagate(const ProblemDef& p, const ArcStructure& s, const ShootingVector& omega,
                       int steps_per_arc);

/// Residual blocks, in order:
///   Phi(x0^1, x1^N)                                   [q]
///   g(x0^k), k in I(C)                                [|C|]
///   x1^k - x0^{k+1}                                   [n(N-1)]
///   p0^1 + D_{x0^1} l                                 [n]
///   p1^k - p0^{k+1} - chi_C(k+1) gamma_{k+1} g'(x0^{k+1}) [n(N-1)]
///   p1^N - D_{x1^N} l                                 [n]
///   H1^k - H0^{k+1}                                   [N-1]
///   p0^k f1(x0^k), k in I(S)                          [|S|]
///   p0^k [f1,f0](x0^k), k in I(S)                     [|S|]
/// with the endpoint Lagrangian l = phi + Psi Phi + sum_C gamma_k g(x0^k).
Vector shooting_residual(const ProblemDef& p, const ArcStructure& s, const TPTrajectory& traj,
                         const ShootingVector& omega);

/// Propagates and evaluates the residual in one call. Throws
/// NonFiniteResidual when any component is not finite.
Vector shooting_function(const ProblemDef& p, const ArcStructure& s, const ShootingVector& omega,
                         int steps_per_arc);

/// Residual as a function of the packed unknowns.
ResidualFunction shooting_map(const ProblemDef& p, const ArcStructure& s, int steps_per_arc);

/// Central-difference Jacobian of the shooting function, equations() x unknowns().
Matrix shooting_jacobian(const ProblemDef& p, const ArcStructure& s, const ShootingVector& omega,
                         int steps_per_arc, bool parallel = false);

struct ShootingOptions {
  int steps_per_arc = 100;
  GaussNewtonOptions newton;
};

struct ShootingSolution {
  ArcStructure structure;  ///< kinds with the converged switching times
  ShootingVector omega;
  TPTrajectory trajectory;
  ConvergenceReport report;
  double cost = 0.0;
};

/// Solves S(omega) = 0 by Gauss-Newton from omega0.
ShootingSolution solve_shooting(const ProblemDef& p, const ArcStructure& s,
                                const ShootingVector& omega0, const ShootingOptions& options);

/// Default steps per arc for a total step budget: max(1, total / N).
int steps_per_arc_for(int total_steps, int arcs);

/// phi(x0^1, x1^N) on a propagated trajectory.
double trajectory_cost(const ProblemDef& p, const TPTrajectory& traj);

}  // namespace arcshoot
