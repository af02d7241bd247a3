#pragma once

#include <vector>

#include "arcshoot/problem.hpp"
#include "arcshoot/types.hpp"

namespace arcshoot {

struct DirectSolveConfig {
  int grid_size = 100;  ///< number of control intervals, >= 10
  double penalty_weight = 1e3;
  double initial_step = 1.0;
  double backtrack = 0.5;
  int max_backtracks = 40;
  int max_iters = 2000;
  /// Stop when the projected-gradient step |u+ - u|_inf / alpha falls below this.
  double tol = 1e-8;
  int rk4_substeps = 20;
};

/// Euler-discretised solution with piecewise-constant control. Vectors are
/// sampled at the grid_size + 1 nodes; u at the last node repeats the last
/// interval's value.
struct DirectSolution {
  std::vector<double> t;
  std::vector<double> u;
  std::vector<Vector> x;
  /// Discrete adjoint of the penalised objective at each node.
  std::vector<Covector> lambda;
  double cost = 0.0;       ///< phi(x_0, x_N) on the Euler states
  /// phi for the returned control re-integrated with RK4 (rk4_substeps per
  /// interval); free of the O(dt) Euler bias.
  double control_cost = 0.0;
  double penalty = 0.0;    ///< sum max(0, g)^2 dt (plus |Phi|^2 for a free initial state)
  double objective = 0.0;  ///< cost + penalty_weight * penalty
  std::vector<double> history;  ///< objective after every accepted iteration
  int iterations = 0;
  bool converged = false;
  bool stalled = false;  ///< no decrease after max_backtracks halvings
};

/// Projected gradient on the discretised problem. Endpoint constraints of the
/// form x_0 = const are imposed exactly; any other Phi is penalised with the
/// same weight and x_0 becomes a decision variable.
DirectSolution direct_solve(const ProblemDef& p, const DirectSolveConfig& cfg = {});

}  // namespace arcshoot
