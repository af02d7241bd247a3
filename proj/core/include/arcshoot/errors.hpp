#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "arcshoot/types.hpp"

namespace arcshoot {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid problem definition, structure, or run configuration.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// |g'(x) f1(x)| fell below the guard, so the constraint is not of first
/// order at x and the feedback control cannot be formed.
class FirstOrderViolation : public Error {
 public:
  FirstOrderViolation(Vector x, double denominator);

  const Vector& point() const noexcept { return x_; }
  double denominator() const noexcept { return denominator_; }

 private:
  Vector x_;
  double denominator_;
};

/// p [[f1,f0],f1](x) is too small to recover the singular control.
class SingularDenominatorError : public Error {
 public:
  SingularDenominatorError(Vector x, double denominator);

  const Vector& point() const noexcept { return x_; }
  double denominator() const noexcept { return denominator_; }

 private:
  Vector x_;
  double denominator_;
};

class NonFiniteState : public Error {
 public:
  using Error::Error;
};

class NonFiniteResidual : public Error {
 public:
  using Error::Error;
};

/// Failure while integrating one arc; wraps the underlying message.
class PropagationError : public Error {
 public:
  PropagationError(int arc, const std::string& what);

  int arc() const noexcept { return arc_; }

 private:
  int arc_;
};

/// The classified trajectory does not form a valid arc structure.
class StructureDetectionError : public Error {
 public:
  StructureDetectionError(const std::string& what, std::vector<char> raw);

  /// Per grid point: '-' lower bound, '+' upper bound, 'C' contact, 'S' interior.
  const std::vector<char>& raw_classification() const noexcept { return raw_; }

 private:
  std::vector<char> raw_;
};

class MaxIterExceeded : public Error {
 public:
  MaxIterExceeded(const std::string& what, Vector best);

  const Vector& best_iterate() const noexcept { return best_; }

 private:
  Vector best_;
};

class RankDeficientJacobian : public Error {
 public:
  RankDeficientJacobian(int rank, int columns);

  int rank() const noexcept { return rank_; }
  int columns() const noexcept { return columns_; }

 private:
  int rank_;
  int columns_;
};

/// Finite-difference stencil evaluation failed for a Jacobian column.
class JacobianColumnError : public Error {
 public:
  JacobianColumnError(int column, const std::string& what);

  int column() const noexcept { return column_; }

 private:
  int column_;
};

/// Quadratic-form assembly produced an inconsistent (non-symmetric) matrix.
class AssemblyError : public Error {
 public:
  using Error::Error;
};

}  // namespace arcshoot
