#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "arcshoot/types.hpp"

namespace arcshoot {

/// Lie brackets needed by the shooting formulation. Convention:
/// [X, Y] := X'Y - Y'X.
enum class Bracket {
  F1F0,     ///< [f1, f0]
  F1F0_F0,  ///< [[f1, f0], f0]
  F1F0_F1,  ///< [[f1, f0], f1]
};

/// Control-affine Mayer problem
///
///   min phi(x_0, x_T)
///   x' = f0(x) + u f1(x),  u_min <= u <= u_max,
///   g(x) <= 0,  Phi(x_0, x_T) = 0,
///
/// on the fixed horizon [0, T]. All callables must be pure and reentrant;
/// the library evaluates them from finite-difference stencils and, when
/// requested, from several threads.
struct ProblemDef {
  std::string name;
  int n = 0;  ///< state dimension
  int q = 0;  ///< number of endpoint equality constraints
  double horizon = 1.0;
  std::optional<double> u_min;  ///< absent means -infinity
  std::optional<double> u_max;  ///< absent means +infinity

  std::function<Vector(const Vector&)> f0;
  std::function<Vector(const Vector&)> f1;
  std::function<Matrix(const Vector&)> df0;
  std::function<Matrix(const Vector&)> df1;

  std::function<double(const Vector&)> g;
  std::function<Covector(const Vector&)> dg;

  std::function<double(const Vector&, const Vector&)> phi;
  /// Gradient of phi with respect to (x_0, x_T).
  std::function<std::pair<Covector, Covector>(const Vector&, const Vector&)> dphi;

  std::function<Vector(const Vector&, const Vector&)> Phi;
  /// Jacobians of Phi with respect to (x_0, x_T), each q x n.
  std::function<std::pair<Matrix, Matrix>(const Vector&, const Vector&)> dPhi;

  /// Optional analytic brackets. When empty, [f1,f0] comes from df0/df1 and
  /// the second-level brackets from central differences of [f1,f0].
  std::function<Vector(Bracket, const Vector&)> bracket;
};

/// Throws ConfigurationError when the definition is incomplete or
/// inconsistent (bounds, dimensions of the returned arrays at `probe`).
void validate_problem(const ProblemDef& p, const Vector& probe);
void validate_problem(const ProblemDef& p);

/// Bracket value at x, sign convention [X, Y] = X'Y - Y'X.
Vector lie_bracket(const ProblemDef& p, Bracket which, const Vector& x);

/// Central-difference second-level bracket, ignoring any analytic override.
/// Exposed so that analytic brackets can be cross-checked.
Vector lie_bracket_fd(const ProblemDef& p, Bracket which, const Vector& x);

/// Guard on |g'(x) f1(x)|: 1e-10 (1 + |g'(x)| |f1(x)|).
double first_order_guard(const ProblemDef& p, const Vector& x);

/// Feedback control keeping g constant on constrained arcs:
/// Gamma(x) = -(g'(x) f0(x)) / (g'(x) f1(x)). Throws FirstOrderViolation.
double gamma_control(const ProblemDef& p, const Vector& x);

/// Central-difference gradient of Gamma.
Covector gamma_gradient(const ProblemDef& p, const Vector& x);

struct FirstOrderReport {
  double min_abs_denominator = std::numeric_limits<double>::infinity();
  bool pass = true;
  /// First sample whose |g' f1| is below the guard; -1 when all pass.
  int offending_index = -1;
};

/// Checks g'(x) f1(x) stays away from zero on the given samples.
FirstOrderReport check_first_order(const ProblemDef& p, std::span<const Vector> xs);

/// Relative step used by the central-difference helpers: 1e-6 max(1, |x|_inf).
double fd_step(const Vector& x);

}  // namespace arcshoot
