#include "arcshoot/direct_init.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "arcshoot/errors.hpp"

namespace arcshoot {

namespace {

struct Discretisation {
  const ProblemDef& p;
  const DirectSolveConfig& cfg;
  int N;
  double dt;
  bool fixed_initial;
  Vector x_fixed;

  struct Eval {
    std::vector<Vector> x;
    double cost = 0.0;
    double penalty = 0.0;
    double objective = 0.0;
  };

  Eval evaluate(const Vector& x0, const Vector& u) const {
    Eval e;
    e.x.reserve(N + 1);
    e.x.push_back(x0);
    for (int i = 0; i < N; ++i) {
      const Vector& xi = e.x.back();
      e.x.push_back(xi + dt * (p.f0(xi) + u(i) * p.f1(xi)));
    }
    for (int i = 1; i <= N; ++i) {
      const double v = std::max(0.0, p.g(e.x[i]));
      e.penalty += v * v * dt;
    }
    if (!fixed_initial && p.q > 0) e.penalty += p.Phi(x0, e.x.back()).squaredNorm();
    e.cost = p.phi(x0, e.x.back());
    e.objective = e.cost + cfg.penalty_weight * e.penalty;
    if (!std::isfinite(e.objective)) throw NonFiniteState("direct solve left the finite range");
    return e;
  }

  // Gradient with respect to (u, x0) through the discrete adjoint.
  void gradient(const Eval& e, const Vector& u, Vector& gu, Vector& gx0,
                std::vector<Covector>& lambda) const {
    const double w = cfg.penalty_weight;
    const Vector& x0 = e.x.front();
    const Vector& xN = e.x.back();
    auto [d0, d1] = p.dphi(x0, xN);
    Vector phi_res;
    Matrix j0, j1;
    if (!fixed_initial && p.q > 0) {
      phi_res = p.Phi(x0, xN);
      std::tie(j0, j1) = p.dPhi(x0, xN);
    }
    lambda.assign(N + 1, Covector());
    Covector l = d1;
    if (phi_res.size()) l += 2.0 * w * phi_res.transpose() * j1;
    const double gN = std::max(0.0, p.g(xN));
    if (gN > 0.0) l += 2.0 * w * dt * gN * p.dg(xN);
    lambda[N] = l;
    gu.resize(N);
    for (int i = N - 1; i >= 0; --i) {
      const Vector& xi = e.x[i];
      gu(i) = dt * l.dot(p.f1(xi));
      const Matrix a = Matrix::Identity(p.n, p.n) + dt * (p.df0(xi) + u(i) * p.df1(xi));
      l = l * a;
      if (i > 0) {
        const double gi = std::max(0.0, p.g(xi));
        if (gi > 0.0) l += 2.0 * w * dt * gi * p.dg(xi);
      }
      lambda[i] = l;
    }
    Covector l0 = lambda[0] + d0;
    if (phi_res.size()) l0 += 2.0 * w * phi_res.transpose() * j0;
    gx0 = fixed_initial ? Vector::Zero(p.n) : Vector(l0.transpose());
  }

  Vector project(Vector u) const {
    for (int i = 0; i < u.size(); ++i) {
      if (p.u_min) u(i) = std::max(u(i), *p.u_min);
      if (p.u_max) u(i) = std::min(u(i), *p.u_max);
    }
    return u;
  }
};

// Phi(x0, xT) = x0 - c with the identity Jacobian in x0 and none in xT.
bool detect_fixed_initial(const ProblemDef& p, Vector& x_fixed) {
  if (p.q != p.n) return false;
  const Vector zero = Vector::Zero(p.n);
  auto [j0, j1] = p.dPhi(zero, zero);
  if (!j0.isIdentity(0.0) || !j1.isZero(0.0)) return false;
  const Vector probe = Vector::Ones(p.n);
  auto [k0, k1] = p.dPhi(probe, probe);
  if (!k0.isIdentity(0.0) || !k1.isZero(0.0)) return false;
  x_fixed = -p.Phi(zero, zero);
  return true;
}

double resimulated_cost(const ProblemDef& p, const Vector& x0, const Vector& u, double dt,
                        int substeps) {
  const double h = dt / std::max(1, substeps);
  Vector x = x0;
  for (int i = 0; i < u.size(); ++i) {
    auto f = [&](const Vector& y) { return Vector(p.f0(y) + u(i) * p.f1(y)); };
    for (int j = 0; j < substeps; ++j) {
      const Vector k1 = f(x);
      const Vector k2 = f(x + 0.5 * h * k1);
      const Vector k3 = f(x + 0.5 * h * k2);
      const Vector k4 = f(x + h * k3);
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  return p.phi(x0, x);
}

}  // namespace

DirectSolution direct_solve(const ProblemDef& p, const DirectSolveConfig& cfg) {
  validate_problem(p);
  if (cfg.grid_size < 10) throw ConfigurationError("direct solve needs grid_size >= 10");
  if (!(cfg.penalty_weight > 0.0)) throw ConfigurationError("penalty_weight must be positive");
  if (!(cfg.backtrack > 0.0 && cfg.backtrack < 1.0)) {
    throw ConfigurationError("backtrack factor must lie in (0, 1)");
  }

  Discretisation d{p, cfg, cfg.grid_size, p.horizon / cfg.grid_size, false, Vector()};
  d.fixed_initial = detect_fixed_initial(p, d.x_fixed);
  Vector x0 = d.fixed_initial ? d.x_fixed : Vector::Zero(p.n);

  double u_start = 0.0;
  if (p.u_min && p.u_max) u_start = 0.5 * (*p.u_min + *p.u_max);
  Vector u = Vector::Constant(d.N, u_start);

  DirectSolution sol;
  auto e = d.evaluate(x0, u);
  Vector gu, gx;
  d.gradient(e, u, gu, gx, sol.lambda);

  double alpha = cfg.initial_step;
  Vector prev_u, prev_x0, prev_gu, prev_gx;
  for (int it = 0; it < cfg.max_iters; ++it) {
    // Barzilai-Borwein step as the first trial after the first iteration.
    if (prev_u.size()) {
      const double sy = (u - prev_u).dot(gu - prev_gu) + (x0 - prev_x0).dot(gx - prev_gx);
      const double ss = (u - prev_u).squaredNorm() + (x0 - prev_x0).squaredNorm();
      alpha = (sy > 0.0) ? std::clamp(ss / sy, 1e-10, 1e10) : cfg.initial_step;
    }
    const Vector pg_u = d.project(u - alpha * gu) - u;
    const double pg = std::max(pg_u.cwiseAbs().maxCoeff(), alpha * gx.cwiseAbs().maxCoeff());
    if (pg / alpha <= cfg.tol) {
      sol.converged = true;
      break;
    }

    bool accepted = false;
    for (int b = 0; b <= cfg.max_backtracks; ++b) {
      const Vector u_new = d.project(u - alpha * gu);
      const Vector x0_new = x0 - alpha * gx;
      const double decrease = gu.dot(u - u_new) + gx.dot(x0 - x0_new);
      try {
        auto trial = d.evaluate(x0_new, u_new);
        if (trial.objective <= e.objective - 1e-4 * decrease && trial.objective < e.objective) {
          prev_u = u;
          prev_x0 = x0;
          prev_gu = gu;
          prev_gx = gx;
          u = u_new;
          x0 = x0_new;
          e = std::move(trial);
          d.gradient(e, u, gu, gx, sol.lambda);
          accepted = true;
          break;
        }
      } catch (const NonFiniteState&) {
        // shrink the step
      }
      alpha *= cfg.backtrack;
    }
    if (!accepted) {
      sol.stalled = true;
      break;
    }
    ++sol.iterations;
    sol.history.push_back(e.objective);
  }

  sol.t.resize(d.N + 1);
  sol.u.resize(d.N + 1);
  for (int i = 0; i <= d.N; ++i) {
    sol.t[i] = (i == d.N) ? p.horizon : i * d.dt;
    sol.u[i] = u(std::min(i, d.N - 1));
  }
  sol.control_cost = resimulated_cost(p, x0, u, d.dt, cfg.rk4_substeps);
  sol.x = std::move(e.x);
  sol.cost = e.cost;
  sol.penalty = e.penalty;
  sol.objective = e.objective;
  return sol;
}

}  // namespace arcshoot
