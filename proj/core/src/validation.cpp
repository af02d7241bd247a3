#include "arcshoot/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "arcshoot/errors.hpp"

namespace arcshoot {

namespace {

std::string format(const char* fmt, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, fmt, a, b);
  return buf;
}

bool is_interior(ArcKind k) { return k == ArcKind::Constrained || k == ArcKind::Singular; }

}  // namespace

ValidationReport validate_solution(const ProblemDef& p, const ArcStructure& s,
                                   const TPTrajectory& traj, const ValidationOptions& o) {
  if (static_cast<int>(traj.arcs.size()) != s.arcs()) {
    throw ConfigurationError("trajectory and structure disagree on the number of arcs");
  }
  ValidationReport r;
  std::vector<Vector> contact_samples;

  for (const ArcGrid& arc : traj.arcs) {
    double h_min = std::numeric_limits<double>::infinity();
    double h_max = -h_min;
    for (int i = 0; i <= arc.steps(); ++i) {
      const Vector& x = arc.x[i];
      r.g_max = std::max(r.g_max, p.g(x));
      const double h = arc_hamiltonian(p, arc.kind, x, arc.p[i]);
      h_min = std::min(h_min, h);
      h_max = std::max(h_max, h);
      if (is_interior(arc.kind)) {
        const double u = arc.w[i];
        if (p.u_min) r.control_margin = std::min(r.control_margin, u - *p.u_min);
        if (p.u_max) r.control_margin = std::min(r.control_margin, *p.u_max - u);
      }
      if (arc.kind == ArcKind::Constrained) {
        contact_samples.push_back(x);
        try {
          r.nu_min = std::min(r.nu_min, constraint_multiplier_density(p, x, arc.p[i]));
        } catch (const FirstOrderViolation&) {
          // reported by the first-order check below
        }
      }
    }
    r.hamiltonian_variation.push_back(h_max - h_min);
    if (arc.kind == ArcKind::Singular) r.legendre_clebsch.merge(arc.diagnostics);
  }

  for (int k = 0; k + 1 < s.arcs(); ++k) {
    const ArcGrid& a = traj.arcs[k];
    const ArcGrid& b = traj.arcs[k + 1];
    JunctionReport j;
    j.junction = k;
    j.control_jump = std::abs(b.w.front() - a.w.back());
    j.hamiltonian_mismatch = std::abs(arc_hamiltonian(p, a.kind, a.x.back(), a.p.back()) -
                                      arc_hamiltonian(p, b.kind, b.x.front(), b.p.front()));
    r.junctions.push_back(j);

    const bool cs = (a.kind == ArcKind::Constrained && b.kind == ArcKind::Singular) ||
                    (a.kind == ArcKind::Singular && b.kind == ArcKind::Constrained);
    if (cs && !(j.control_jump > o.min_jump)) {
      r.findings.push_back(format("control is continuous at the C/S junction %g (jump %.3g)",
                                  k + 1, j.control_jump));
    }
    if (!(j.hamiltonian_mismatch <= o.tol_hamiltonian)) {
      r.findings.push_back(
          format("Hamiltonian jumps by %.3g at junction %g", j.hamiltonian_mismatch, k + 1));
    }
  }

  r.first_order = check_first_order(p, contact_samples);
  if (!r.first_order.pass) {
    r.findings.push_back(format("first-order condition fails on a C arc (min |g' f1| = %.3g)",
                                r.first_order.min_abs_denominator));
  }
  if (std::isfinite(r.control_margin) && !(r.control_margin > o.min_margin)) {
    r.findings.push_back(
        format("control reaches the bounds on a C or S arc (margin %.3g)", r.control_margin));
  }
  if (r.legendre_clebsch.legendre_clebsch_violations > 0) {
    r.findings.push_back(format("Legendre-Clebsch sign fails at %g singular nodes (worst %.3g)",
                                r.legendre_clebsch.legendre_clebsch_violations,
                                r.legendre_clebsch.worst_legendre_clebsch));
  }
  if (std::isfinite(r.nu_min) && !(r.nu_min >= -o.tol_nu)) {
    r.findings.push_back(format("constraint multiplier density is negative (min %.3g)", r.nu_min));
  }
  if (!(r.g_max <= o.tol_g)) {
    r.findings.push_back(format("state constraint violated (max g = %.3g)", r.g_max));
  }
  for (std::size_t k = 0; k < r.hamiltonian_variation.size(); ++k) {
    if (!(r.hamiltonian_variation[k] <= o.tol_hamiltonian)) {
      r.findings.push_back(format("Hamiltonian varies by %.3g along arc %g",
                                  r.hamiltonian_variation[k], static_cast<double>(k + 1)));
    }
  }
  return r;
}

}  // namespace arcshoot
