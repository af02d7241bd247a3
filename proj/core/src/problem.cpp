#include "arcshoot/problem.hpp"

#include <cmath>
#include <sstream>

#include "arcshoot/errors.hpp"

namespace arcshoot {

FirstOrderViolation::FirstOrderViolation(Vector x, double denominator)
    : Error([&] {
        std::ostringstream os;
        os << "state constraint is not of first order at x = [" << x.transpose()
           << "]: |g'(x) f1(x)| = " << std::abs(denominator);
        return os.str();
      }()),
      x_(std::move(x)),
      denominator_(denominator) {}

SingularDenominatorError::SingularDenominatorError(Vector x, double denominator)
    : Error([&] {
        std::ostringstream os;
        os << "singular control undefined at x = [" << x.transpose()
           << "]: |p [[f1,f0],f1](x)| = " << std::abs(denominator);
        return os.str();
      }()),
      x_(std::move(x)),
      denominator_(denominator) {}

PropagationError::PropagationError(int arc, const std::string& what)
    : Error("arc " + std::to_string(arc + 1) + ": " + what), arc_(arc) {}

StructureDetectionError::StructureDetectionError(const std::string& what,
                                                 std::vector<char> raw)
    : Error(what), raw_(std::move(raw)) {}

MaxIterExceeded::MaxIterExceeded(const std::string& what, Vector best)
    : Error(what), best_(std::move(best)) {}

RankDeficientJacobian::RankDeficientJacobian(int rank, int columns)
    : Error("Jacobian has numerical rank " + std::to_string(rank) + " < " +
            std::to_string(columns) + " unknowns"),
      rank_(rank),
      columns_(columns) {}

JacobianColumnError::JacobianColumnError(int column, const std::string& what)
    : Error("Jacobian column " + std::to_string(column) + ": " + what), column_(column) {}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigurationError(what);
}

void require_size(const Vector& v, int n, const char* what) {
  if (v.size() != n) {
    throw ConfigurationError(std::string(what) + " returned size " + std::to_string(v.size()) +
                             ", expected " + std::to_string(n));
  }
}

void require_size(const Covector& v, int n, const char* what) {
  if (v.size() != n) {
    throw ConfigurationError(std::string(what) + " returned size " + std::to_string(v.size()) +
                             ", expected " + std::to_string(n));
  }
}

void require_shape(const Matrix& m, int rows, int cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ConfigurationError(std::string(what) + " returned " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()) + ", expected " + std::to_string(rows) +
                             "x" + std::to_string(cols));
  }
}

Vector checked_f0(const ProblemDef& p, const Vector& x) {
  Vector v = p.f0(x);
  require_size(v, p.n, "f0");
  return v;
}

Vector checked_f1(const ProblemDef& p, const Vector& x) {
  Vector v = p.f1(x);
  require_size(v, p.n, "f1");
  return v;
}

Vector first_bracket(const ProblemDef& p, const Vector& x) {
  // [f1, f0] = f1' f0 - f0' f1
  Matrix j0 = p.df0(x);
  Matrix j1 = p.df1(x);
  require_shape(j0, p.n, p.n, "df0");
  require_shape(j1, p.n, p.n, "df1");
  return j1 * checked_f0(p, x) - j0 * checked_f1(p, x);
}

Vector first_bracket_any(const ProblemDef& p, const Vector& x) {
  if (p.bracket) {
    Vector v = p.bracket(Bracket::F1F0, x);
    require_size(v, p.n, "bracket [f1,f0]");
    return v;
  }
  return first_bracket(p, x);
}

// Directional derivative of [f1,f0] along v by central differences.
Vector bracket_directional(const ProblemDef& p, const Vector& x, const Vector& v) {
  const double norm = v.norm();
  if (norm == 0.0) return Vector::Zero(p.n);
  const double h = fd_step(x);
  const Vector d = v / norm;
  return norm * (first_bracket_any(p, x + h * d) - first_bracket_any(p, x - h * d)) / (2.0 * h);
}

}  // namespace

double fd_step(const Vector& x) {
  const double scale = x.size() ? x.lpNorm<Eigen::Infinity>() : 0.0;
  return 1e-6 * std::max(1.0, scale);
}

void validate_problem(const ProblemDef& p) { validate_problem(p, Vector::Zero(std::max(p.n, 0))); }

void validate_problem(const ProblemDef& p, const Vector& probe) {
  require(p.n > 0, "problem '" + p.name + "': state dimension must be positive");
  require(p.q >= 0, "problem '" + p.name + "': q must be non-negative");
  require(std::isfinite(p.horizon) && p.horizon > 0.0,
          "problem '" + p.name + "': horizon must be positive");
  if (p.u_min && p.u_max) {
    require(*p.u_min < *p.u_max, "problem '" + p.name + "': u_min must be below u_max");
  }
  require(p.f0 && p.f1 && p.df0 && p.df1, "problem '" + p.name + "': missing vector field");
  require(p.g && p.dg, "problem '" + p.name + "': missing state constraint");
  require(p.phi && p.dphi, "problem '" + p.name + "': missing cost");
  require(p.q == 0 || (p.Phi && p.dPhi), "problem '" + p.name + "': missing endpoint map");
  require(probe.size() == p.n, "probe point has wrong dimension");

  checked_f0(p, probe);
  checked_f1(p, probe);
  require_shape(p.df0(probe), p.n, p.n, "df0");
  require_shape(p.df1(probe), p.n, p.n, "df1");
  require_size(p.dg(probe), p.n, "dg");
  auto [d0, dT] = p.dphi(probe, probe);
  require_size(d0, p.n, "dphi/dx0");
  require_size(dT, p.n, "dphi/dxT");
  if (p.q > 0) {
    require_size(p.Phi(probe, probe), p.q, "Phi");
    auto [j0, jT] = p.dPhi(probe, probe);
    require_shape(j0, p.q, p.n, "dPhi/dx0");
    require_shape(jT, p.q, p.n, "dPhi/dxT");
  }
}

Vector lie_bracket(const ProblemDef& p, Bracket which, const Vector& x) {
  if (x.size() != p.n) throw ConfigurationError("lie_bracket: point has wrong dimension");
  if (p.bracket) {
    Vector v = p.bracket(which, x);
    require_size(v, p.n, "bracket");
    return v;
  }
  return lie_bracket_fd(p, which, x);
}

Vector lie_bracket_fd(const ProblemDef& p, Bracket which, const Vector& x) {
  if (x.size() != p.n) throw ConfigurationError("lie_bracket: point has wrong dimension");
  switch (which) {
    case Bracket::F1F0:
      return first_bracket(p, x);
    case Bracket::F1F0_F0: {
      // [[f1,f0], f0] = [f1,f0]' f0 - f0' [f1,f0]
      const Vector b = first_bracket(p, x);
      return bracket_directional(p, x, checked_f0(p, x)) - p.df0(x) * b;
    }
    case Bracket::F1F0_F1: {
      const Vector b = first_bracket(p, x);
      return bracket_directional(p, x, checked_f1(p, x)) - p.df1(x) * b;
    }
  }
  throw ConfigurationError("lie_bracket: unknown bracket id");
}

double first_order_guard(const ProblemDef& p, const Vector& x) {
  return 1e-10 * (1.0 + p.dg(x).norm() * p.f1(x).norm());
}

double gamma_control(const ProblemDef& p, const Vector& x) {
  const Covector dg = p.dg(x);
  require_size(dg, p.n, "dg");
  const double num = dg.dot(checked_f0(p, x));
  const double den = dg.dot(checked_f1(p, x));
  if (!(std::abs(den) >= first_order_guard(p, x))) throw FirstOrderViolation(x, den);
  return -num / den;
}

Covector gamma_gradient(const ProblemDef& p, const Vector& x) {
  const double h = fd_step(x);
  Covector grad(p.n);
  Vector xp = x;
  Vector xm = x;
  for (int i = 0; i < p.n; ++i) {
    xp(i) = x(i) + h;
    xm(i) = x(i) - h;
    grad(i) = (gamma_control(p, xp) - gamma_control(p, xm)) / (2.0 * h);
    xp(i) = x(i);
    xm(i) = x(i);
  }
  return grad;
}

FirstOrderReport check_first_order(const ProblemDef& p, std::span<const Vector> xs) {
  FirstOrderReport report;
  double previous = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double den = p.dg(xs[i]).dot(p.f1(xs[i]));
    report.min_abs_denominator = std::min(report.min_abs_denominator, std::abs(den));
    // A sign change between consecutive samples means a zero in between.
    const bool crossed = i > 0 && den * previous < 0.0;
    if ((!(std::abs(den) >= first_order_guard(p, xs[i])) || crossed) && report.pass) {
      report.pass = false;
      report.offending_index = static_cast<int>(i);
    }
    previous = den;
  }
  return report;
}

}  // namespace arcshoot
