#include "arcshoot/shooting.hpp"

#include <sstream>
#include <tuple>

#include "arcshoot/errors.hpp"

namespace arcshoot {

ShootingLayout ShootingLayout::of(const ProblemDef& p, const ArcStructure& s) {
  const IndexSets sets = index_sets(s);
  ShootingLayout l;
  l.arcs = s.arcs();
  l.n = p.n;
  l.q = p.q;
  l.constrained = static_cast<int>(sets.constrained.size());
  l.singular = static_cast<int>(sets.singular.size());
  return l;
}

Vector ShootingVector::pack() const {
  const int arcs = static_cast<int>(x0.size());
  const int n = arcs ? static_cast<int>(x0.front().size()) : 0;
  Vector flat(2 * arcs * n + static_cast<int>(tau.size()) + psi.size() + gamma.size());
  int at = 0;
  for (const Vector& x : x0) {
    flat.segment(at, n) = x;
    at += n;
  }
  for (double t : tau) flat(at++) = t;
  for (const Covector& p : p0) {
    flat.segment(at, n) = p.transpose();
    at += n;
  }
  flat.segment(at, psi.size()) = psi.transpose();
  at += static_cast<int>(psi.size());
  flat.segment(at, gamma.size()) = gamma;
  return flat;
}

ShootingVector ShootingVector::unpack(const Vector& flat, const ShootingLayout& l) {
  if (flat.size() != l.unknowns()) {
    throw ConfigurationError("shooting vector has length " + std::to_string(flat.size()) +
                             ", expected " + std::to_string(l.unknowns()));
  }
  ShootingVector w;
  int at = 0;
  for (int k = 0; k < l.arcs; ++k) {
    w.x0.push_back(flat.segment(at, l.n));
    at += l.n;
  }
  for (int k = 0; k + 1 < l.arcs; ++k) w.tau.push_back(flat(at++));
  for (int k = 0; k < l.arcs; ++k) {
    w.p0.push_back(flat.segment(at, l.n).transpose());
    at += l.n;
  }
  w.psi = flat.segment(at, l.q).transpose();
  at += l.q;
  w.gamma = flat.segment(at, l.constrained);
  return w;
}

int steps_per_arc_for(int total_steps, int arcs) {
  return std::max(1, total_steps / std::max(1, arcs));
}

namespace {

void check_omega(const ProblemDef& p, const ArcStructure& s, const ShootingVector& w) {
  const ShootingLayout l = ShootingLayout::of(p, s);
  if (static_cast<int>(w.x0.size()) != l.arcs || static_cast<int>(w.p0.size()) != l.arcs ||
      static_cast<int>(w.tau.size()) != l.arcs - 1 || w.psi.size() != l.q ||
      w.gamma.size() != l.constrained) {
    throw ConfigurationError("shooting vector does not match the arc structure");
  }
  double previous = 0.0;
  for (double t : w.tau) {
    if (!(t > previous) || !(t < p.horizon)) {
      std::ostringstream os;
      os << "switching times left (0, T) or lost their order: tau = " << t;
      throw ConfigurationError(os.str());
    }
    previous = t;
  }
}

}  // namespace

TPTrajectory propagate(const ProblemDef& p, const ArcStructure& s, const ShootingVector& omega,
                       int steps_per_arc) {
  check_omega(p, s, omega);
  TPTrajectory traj;
  traj.tau = omega.tau;
  const int arcs = s.arcs();
  for (int k = 0; k < arcs; ++k) {
    const double t0 = k == 0 ? 0.0 : omega.tau[k - 1];
    const double t1 = k + 1 == arcs ? p.horizon : omega.tau[k];
    try {
      ArcGrid grid =
          propagate_arc(p, s.kinds[k], t1 - t0, omega.x0[k], omega.p0[k], steps_per_arc);
      grid.index = k;
      grid.t_begin = t0;
      grid.t_end = t1;
      traj.arcs.push_back(std::move(grid));
    } catch (const PropagationError&) {
      throw;
    } catch (const Error& e) {
      throw PropagationError(k, e.what());
    }
  }
  return traj;
}

Vector shooting_residual(const ProblemDef& p, const ArcStructure& s, const TPTrajectory& traj,
                         const ShootingVector& w) {
  const ShootingLayout l = ShootingLayout::of(p, s);
  const IndexSets sets = index_sets(s);
  const int n = p.n;
  const int arcs = l.arcs;

  // gamma slot for each arc, -1 when the arc is not constrained
  std::vector<int> gamma_slot(arcs, -1);
  for (std::size_t j = 0; j < sets.constrained.size(); ++j) {
    gamma_slot[sets.constrained[j]] = static_cast<int>(j);
  }

  const Vector& xa = w.x0.front();
  const Vector& xb = traj.arcs.back().x.back();
  const Covector& pb = traj.arcs.back().p.back();
  auto [dphi0, dphiT] = p.dphi(xa, xb);

  Vector r(l.equations());
  int at = 0;

  Matrix dPhi0 = Matrix::Zero(p.q, n);
  Matrix dPhiT = Matrix::Zero(p.q, n);
  if (p.q > 0) {
    r.segment(at, p.q) = p.Phi(xa, xb);
    at += p.q;
    std::tie(dPhi0, dPhiT) = p.dPhi(xa, xb);
  }
  for (int k : sets.constrained) r(at++) = p.g(w.x0[k]);
  for (int k = 0; k + 1 < arcs; ++k) {
    r.segment(at, n) = traj.arcs[k].x.back() - w.x0[k + 1];
    at += n;
  }

  Covector initial = w.p0.front() + dphi0 + w.psi * dPhi0;
  if (gamma_slot[0] >= 0) initial += w.gamma(gamma_slot[0]) * p.dg(xa);
  r.segment(at, n) = initial.transpose();
  at += n;

  for (int k = 0; k + 1 < arcs; ++k) {
    Covector jump = traj.arcs[k].p.back() - w.p0[k + 1];
    if (gamma_slot[k + 1] >= 0) jump -= w.gamma(gamma_slot[k + 1]) * p.dg(w.x0[k + 1]);
    r.segment(at, n) = jump.transpose();
    at += n;
  }

  r.segment(at, n) = (pb - dphiT - w.psi * dPhiT).transpose();
  at += n;

  for (int k = 0; k + 1 < arcs; ++k) {
    const double h_end = arc_hamiltonian(p, s.kinds[k], traj.arcs[k].x.back(), traj.arcs[k].p.back());
    const double h_start = arc_hamiltonian(p, s.kinds[k + 1], w.x0[k + 1], w.p0[k + 1]);
    r(at++) = h_end - h_start;
  }
  for (int k : sets.singular) r(at++) = w.p0[k].dot(p.f1(w.x0[k]));
  for (int k : sets.singular) r(at++) = w.p0[k].dot(lie_bracket(p, Bracket::F1F0, w.x0[k]));
  return r;
}

Vector shooting_function(const ProblemDef& p, const ArcStructure& s, const ShootingVector& omega,
                         int steps_per_arc) {
  const TPTrajectory traj = propagate(p, s, omega, steps_per_arc);
  Vector r = shooting_residual(p, s, traj, omega);
  if (!r.allFinite()) throw NonFiniteResidual("shooting residual is not finite");
  return r;
}

ResidualFunction shooting_map(const ProblemDef& p, const ArcStructure& s, int steps_per_arc) {
  const ShootingLayout layout = ShootingLayout::of(p, s);
  return [&p, s, layout, steps_per_arc](const Vector& flat) {
    return shooting_function(p, s, ShootingVector::unpack(flat, layout), steps_per_arc);
  };
}

Matrix shooting_jacobian(const ProblemDef& p, const ArcStructure& s, const ShootingVector& omega,
                         int steps_per_arc, bool parallel) {
  return fd_jacobian(shooting_map(p, s, steps_per_arc), omega.pack(), parallel);
}

double trajectory_cost(const ProblemDef& p, const TPTrajectory& traj) {
  return p.phi(traj.arcs.front().x.front(), traj.arcs.back().x.back());
}

ShootingSolution solve_shooting(const ProblemDef& p, const ArcStructure& s,
                                const ShootingVector& omega0, const ShootingOptions& options) {
  validate_structure(p, s);
  const ShootingLayout layout = ShootingLayout::of(p, s);
  GaussNewtonResult gn =
      gauss_newton(shooting_map(p, s, options.steps_per_arc), omega0.pack(), options.newton);

  ShootingSolution sol;
  sol.omega = ShootingVector::unpack(gn.solution, layout);
  sol.structure = s;
  sol.structure.tau = sol.omega.tau;
  sol.trajectory = propagate(p, s, sol.omega, options.steps_per_arc);
  sol.report = std::move(gn.report);
  sol.cost = trajectory_cost(p, sol.trajectory);
  return sol;
}

}  // namespace arcshoot
