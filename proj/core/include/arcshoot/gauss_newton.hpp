#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arcshoot/types.hpp"

namespace arcshoot {

using ResidualFunction = std::function<Vector(const Vector&)>;

struct GaussNewtonOptions {
  double tol = 1e-8;  ///< on |F|_inf
  int max_iter = 50;
  int max_halvings = 20;
  double min_step = 1e-12;
  /// Singular values below rank_rtol * sigma_max are treated as zero.
  double rank_rtol = 1e-10;
  bool parallel_jacobian = false;
};

struct IterationRecord {
  double residual_norm = 0.0;  ///< |F|_inf after the step
  double step_norm = 0.0;      ///< |y_{j+1} - y_j|_2
  double step_scale = 1.0;     ///< accepted damping factor (1, 1/2, ...)
};

struct ConvergenceReport {
  double initial_residual = 0.0;
  std::vector<IterationRecord> iterations;
  double final_residual = 0.0;
  int jacobian_rank = 0;
  int unknowns = 0;
  int equations = 0;
  Vector singular_values;
  double smallest_singular_value = 0.0;
  std::optional<double> order_estimate;
  bool converged = false;
  std::string stop_reason;

  /// |F|_inf of the start point followed by every accepted iterate.
  std::vector<double> residual_history() const;
};

struct GaussNewtonResult {
  Vector solution;
  ConvergenceReport report;
};

/// Column-wise central differences with h_i = sqrt(eps) max(1, |y_i|).
/// Columns are independent and run on separate threads when `parallel`.
/// Throws JacobianColumnError naming the failing column.
Matrix fd_jacobian(const ResidualFunction& f, const Vector& y, bool parallel = false);

/// Minimum-norm least-squares solution of J d = -r through an SVD truncated
/// at rank_rtol * sigma_max.
Vector gauss_newton_step(const Matrix& jacobian, const Vector& residual, double rank_rtol);

/// Empirical order q from the last three entries of a residual history,
/// q = log(r_k / r_{k-1}) / log(r_{k-1} / r_{k-2}). Empty when fewer than
/// three positive entries are available.
std::optional<double> estimate_order(std::span<const double> history);

/// Gauss-Newton with step halving on |F|_2. Stops when |F|_inf <= tol, when
/// the accepted step is below min_step, or when no damped step decreases the
/// residual. Throws MaxIterExceeded when max_iter is hit and
/// RankDeficientJacobian when the final Jacobian loses column rank.
GaussNewtonResult gauss_newton(const ResidualFunction& f, const Vector& y0,
                               const GaussNewtonOptions& options = {});

}  // namespace arcshoot
