#include "arcshoot/tp_dynamics.hpp"

#include <cmath>

#include "arcshoot/errors.hpp"

namespace arcshoot {

void ControlDiagnostics::merge(const ControlDiagnostics& other) {
  legendre_clebsch_violations += other.legendre_clebsch_violations;
  worst_legendre_clebsch = std::max(worst_legendre_clebsch, other.worst_legendre_clebsch);
}

double singular_guard(const Covector& costate, const Vector& bracket) {
  return 1e-10 * (1.0 + costate.norm() * bracket.norm());
}

double arc_control(const ProblemDef& p, ArcKind kind, const Vector& x, const Covector& costate,
                   ControlDiagnostics* diag) {
  switch (kind) {
    case ArcKind::BMinus:
      if (!p.u_min) throw ConfigurationError("B- arc without a lower control bound");
      return *p.u_min;
    case ArcKind::BPlus:
      if (!p.u_max) throw ConfigurationError("B+ arc without an upper control bound");
      return *p.u_max;
    case ArcKind::Constrained:
      return gamma_control(p, x);
    case ArcKind::Singular: {
      const Vector b0 = lie_bracket(p, Bracket::F1F0_F0, x);
      const Vector b1 = lie_bracket(p, Bracket::F1F0_F1, x);
      const double den = costate.dot(b1);
      if (!(std::abs(den) >= singular_guard(costate, b1))) {
        throw SingularDenominatorError(x, den);
      }
      if (diag) {
        diag->worst_legendre_clebsch = std::max(diag->worst_legendre_clebsch, den);
        if (den >= 0.0) ++diag->legendre_clebsch_violations;
      }
      return -costate.dot(b0) / den;
    }
  }
  throw ConfigurationError("unknown arc kind");
}

ArcDerivative arc_rhs(const ProblemDef& p, ArcKind kind, double dt, const Vector& x,
                      const Covector& costate, ControlDiagnostics* diag) {
  const double w = arc_control(p, kind, x, costate, diag);
  const Vector f1 = p.f1(x);
  ArcDerivative d;
  d.dx = dt * (p.f0(x) + w * f1);
  Covector dxh = costate * (p.df0(x) + w * p.df1(x));
  if (kind == ArcKind::Constrained) dxh += costate.dot(f1) * gamma_gradient(p, x);
  d.dp = -dt * dxh;
  return d;
}

double arc_hamiltonian(const ProblemDef& p, ArcKind kind, const Vector& x,
                       const Covector& costate) {
  const double w = arc_control(p, kind, x, costate);
  return costate.dot(p.f0(x) + w * p.f1(x));
}

double constraint_multiplier_density(const ProblemDef& p, const Vector& x,
                                     const Covector& costate) {
  const double den = p.dg(x).dot(p.f1(x));
  if (!(std::abs(den) >= first_order_guard(p, x))) throw FirstOrderViolation(x, den);
  return costate.dot(lie_bracket(p, Bracket::F1F0, x)) / den;
}

ArcGrid propagate_arc(const ProblemDef& p, ArcKind kind, double dt, const Vector& x0,
                      const Covector& p0, int steps) {
  if (steps < 1) throw ConfigurationError("propagate_arc: at least one step is required");
  const double h = 1.0 / steps;

  ArcGrid grid;
  grid.kind = kind;
  grid.s.resize(steps + 1);
  grid.x.resize(steps + 1);
  grid.p.resize(steps + 1);
  grid.w.resize(steps + 1);

  Vector x = x0;
  Covector pc = p0;
  auto check = [&](int i) {
    if (!x.allFinite() || !pc.allFinite()) {
      throw NonFiniteState("non-finite state or costate at node " + std::to_string(i));
    }
  };
  check(0);
  for (int i = 0; i <= steps; ++i) {
    grid.s[i] = (i == steps) ? 1.0 : i * h;
    grid.x[i] = x;
    grid.p[i] = pc;
    grid.w[i] = arc_control(p, kind, x, pc, &grid.diagnostics);
    if (i == steps) break;

    const ArcDerivative k1 = arc_rhs(p, kind, dt, x, pc);
    const ArcDerivative k2 = arc_rhs(p, kind, dt, x + 0.5 * h * k1.dx, pc + 0.5 * h * k1.dp);
    const ArcDerivative k3 = arc_rhs(p, kind, dt, x + 0.5 * h * k2.dx, pc + 0.5 * h * k2.dp);
    const ArcDerivative k4 = arc_rhs(p, kind, dt, x + h * k3.dx, pc + h * k3.dp);
    x += (h / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
    pc += (h / 6.0) * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp);
    check(i + 1);
  }
  return grid;
}

}  // namespace arcshoot
