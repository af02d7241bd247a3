// Acceptance suite: one summary line per criterion, followed by the
// individual checks. Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "arcshoot/arc_structure.hpp"
#include "arcshoot/builtin_problems.hpp"
#include "arcshoot/direct_init.hpp"
#include "arcshoot/second_order.hpp"
#include "arcshoot/shooting.hpp"
#include "arcshoot/validation.hpp"
#include "regulator_fixture.hpp"
#include "test_problems.hpp"

namespace {

using namespace arcshoot;

constexpr double kTau2Reference = 2.6036023;
constexpr double kCostReference = 0.3934884;
constexpr double kP1Reference = 1.404;

struct Check {
  std::string what;
  bool ok;
};

class Criterion {
 public:
  Criterion(int id, std::string title) : id_(id), title_(std::move(title)) {}

  void check(bool ok, const char* fmt, ...) __attribute__((format(printf, 3, 4))) {
    char buf[256];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    checks_.push_back({buf, ok});
  }
  void info(const std::string& line) { notes_.push_back(line); }

  bool report() const {
    bool ok = true;
    for (const Check& c : checks_) ok = ok && c.ok;
    std::printf("criterion %d: %s  %s\n", id_, ok ? "PASS" : "FAIL", title_.c_str());
    for (const Check& c : checks_) std::printf("    [%s] %s\n", c.ok ? " ok " : "FAIL", c.what.c_str());
    for (const std::string& n : notes_) std::printf("    [info] %s\n", n.c_str());
    return ok;
  }

 private:
  int id_;
  std::string title_;
  std::vector<Check> checks_;
  std::vector<std::string> notes_;
};

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct RegulatorRun {
  ShootingSolution sol;
  double seconds = 0.0;
};

RegulatorRun solve_regulator() {
  const BuiltinProblem& b = find_problem("regulator");
  const auto t0 = std::chrono::steady_clock::now();
  RegulatorRun run{solve_shooting(b.problem, *b.structure, testing::perturbed_regulator_guess(),
                                  testing::regulator_options()),
                   0.0};
  run.seconds = seconds_since(t0);
  return run;
}

bool criterion1(const RegulatorRun& run) {
  Criterion c(1, "regulator reproduction (B-CS, 1000 steps, +-5% perturbed start)");
  const ShootingSolution& s = run.sol;
  const int iters = static_cast<int>(s.report.iterations.size());
  c.check(s.report.converged && iters <= 10, "converged in %d iterations (<= 10)", iters);
  c.check(s.report.final_residual <= 1e-6, "|S|_inf = %.3g (<= 1e-6)", s.report.final_residual);
  c.check(std::abs(s.omega.tau[0] - 1.2) <= 1e-3, "tau1 = %.9g (1.2 +- 1e-3)", s.omega.tau[0]);
  c.check(std::abs(s.omega.tau[1] - kTau2Reference) <= 1e-3, "tau2 = %.9g (%.8g +- 1e-3)",
          s.omega.tau[1], kTau2Reference);
  c.check(std::abs(s.cost - kCostReference) <= 1e-3, "cost = %.9g (%.7g +- 1e-3)", s.cost,
          kCostReference);
  c.check(run.seconds < 10.0, "runtime %.2f s (< 10 s)", run.seconds);
  const double off = std::abs(s.omega.tau[1] - 2.6);
  c.info(fmt("closed-form extremal: tau2 = %.9g, cost = %.9g", regulator::tau2, regulator::cost()));
  c.info(fmt("|tau2 - 2.6| = %.3g", off) + (off <= 5e-3 ? " (within 5e-3)" : " (outside 5e-3)"));
  return c.report();
}

bool criterion2(const RegulatorRun& run) {
  Criterion c(2, "analytic arc checks at the converged solution");
  const TPTrajectory& traj = run.sol.trajectory;
  double e_bx1 = 0.0, e_bx2 = 0.0, e_cx1 = 0.0, e_p3 = 0.0, e_us = 0.0;
  for (const ArcGrid& g : traj.arcs) {
    for (int i = 0; i <= g.steps(); ++i) {
      const double t = g.time(i);
      const Vector& x = g.x[i];
      e_p3 = std::max(e_p3, std::abs(g.p[i](2) - 1.0));
      if (g.kind == ArcKind::BMinus) {
        e_bx2 = std::max(e_bx2, std::abs(x(1) - (1.0 - t)));
        e_bx1 = std::max(e_bx1, std::abs(x(0) - (t - 0.5 * t * t)));
      } else if (g.kind == ArcKind::Constrained) {
        e_cx1 = std::max(e_cx1, std::abs(x(0) - (0.72 - t / 5.0)));
      } else if (g.kind == ArcKind::Singular) {
        e_us = std::max(e_us, std::abs(g.w[i] - x(0)));
      }
    }
  }
  const double p1 = traj.arcs[0].p.back()(0);
  c.check(e_bx2 <= 1e-9, "B-: max |x2 - (1 - t)| = %.3g (<= 1e-9)", e_bx2);
  c.check(e_bx1 <= 1e-9, "B-: max |x1 - (t - t^2/2)| = %.3g (<= 1e-9)", e_bx1);
  c.check(e_cx1 <= 1e-6, "C: max |x1 - (0.72 - t/5)| = %.3g (<= 1e-6)", e_cx1);
  c.check(e_p3 <= 1e-8, "max |p3 - 1| = %.3g (<= 1e-8)", e_p3);
  c.check(std::abs(p1 - kP1Reference) <= 1e-3, "p1(tau1) = %.9g (%.3f +- 1e-3)", p1, kP1Reference);
  c.check(e_us <= 1e-8, "S: max |u - x1| = %.3g (<= 1e-8)", e_us);
  c.info(fmt("closed-form p1(tau1) = 0.2 + (tau1^2 - tau2^2)/10 - 0.72 (tau1 - tau2) = %.9g",
             0.2 + (1.44 - 6.76) / 10.0 - 0.72 * (1.2 - 2.6)));
  return c.report();
}

bool criterion3(const RegulatorRun& run) {
  Criterion c(3, "quadratic convergence evidence");
  const auto& order = run.sol.report.order_estimate;
  c.check(order && *order >= 1.7, "fitted order over the last three iterations = %.3f (>= 1.7)",
          order.value_or(0.0));
  std::string h = "residual history:";
  for (double r : run.sol.report.residual_history()) h += fmt(" %.2e", r);
  c.info(h);
  return c.report();
}

bool criterion4(const RegulatorRun& run) {
  Criterion c(4, "overdeterminedness and rank");
  const ProblemDef p = regulator_problem();
  const ArcKind kinds[] = {ArcKind::BMinus, ArcKind::BPlus, ArcKind::Constrained, ArcKind::Singular};
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> arcs(1, 6), pick(0, 3);
  int good = 0;
  for (int trial = 0; trial < 20; ++trial) {
    ArcStructure s;
    const int n = arcs(rng);
    while (s.arcs() < n) {
      const ArcKind k = kinds[pick(rng)];
      if (s.kinds.empty() || s.kinds.back() != k) s.kinds.push_back(k);
    }
    for (int i = 1; i < n; ++i) s.tau.push_back(p.horizon * i / n);
    const ShootingLayout l = ShootingLayout::of(p, s);
    ShootingVector w;
    for (int k = 0; k < n; ++k) {
      w.x0.push_back(Vector{{0.1, -0.2, 0.0}});
      w.p0.push_back(Covector{{0.1, 0.1, 1.0}});
    }
    w.tau = s.tau;
    w.psi = Covector::Zero(p.q);
    w.gamma = Vector::Zero(l.constrained);
    const long residual = shooting_function(p, s, w, 5).size();
    const long unknowns = w.pack().size();
    if (residual - unknowns == 2L * static_cast<long>(index_sets(s).singular.size())) ++good;
  }
  c.check(good == 20, "residual - unknowns = 2|I(S)| on %d of 20 random structures", good);
  const ConvergenceReport& r = run.sol.report;
  c.check(r.jacobian_rank == r.unknowns, "Jacobian rank %d of %d columns", r.jacobian_rank,
          r.unknowns);
  c.check(r.smallest_singular_value > 1e-6, "smallest singular value %.3g (> 1e-6)",
          r.smallest_singular_value);
  return c.report();
}

bool criterion5(const RegulatorRun& run) {
  Criterion c(5, "Hamiltonian invariants");
  const ValidationReport v =
      validate_solution(regulator_problem(), run.sol.structure, run.sol.trajectory);
  double var = 0.0, jump = 0.0;
  for (double h : v.hamiltonian_variation) var = std::max(var, h);
  for (const JunctionReport& j : v.junctions) jump = std::max(jump, j.hamiltonian_mismatch);
  c.check(var <= 1e-6, "max per-arc Hamiltonian variation %.3g (<= 1e-6)", var);
  c.check(jump <= 1e-6, "max junction mismatch |H1^k - H0^(k+1)| %.3g (<= 1e-6)", jump);
  return c.report();
}

bool criterion6(const RegulatorRun& run) {
  Criterion c(6, "second-order certificate");
  const ShootingSolution& sol = run.sol;
  const ProblemDef p = regulator_problem();
  const auto t0 = std::chrono::steady_clock::now();
  const SecondOrderModel model = build_model(p, sol.structure, sol.omega);
  const QuadraticFormData q = assemble_omega(model);
  const PositivityReport pos = check_positivity(q);
  const double build_seconds = seconds_since(t0);

  // Closed-form comparison on critical directions with fixed switching times;
  // original-time quantities are y = dt3 Y and h = dt3 h_s on the singular arc.
  Matrix cons(q.cons.rows() + 2, q.coordinates());
  cons << q.cons, Matrix::Zero(2, q.coordinates());
  cons(q.cons.rows(), 9) = 1.0;
  cons(q.cons.rows() + 1, 10) = 1.0;
  const Matrix basis = constraint_nullspace(cons, 1e-9);
  const double tau[] = {0.0, sol.omega.tau[0], sol.omega.tau[1], p.horizon};
  const int K = q.intervals;
  std::mt19937 rng(6);
  std::normal_distribution<double> N01;
  double worst_literal = 0.0, worst_endpoint = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    Vector a(basis.cols());
    for (int i = 0; i < a.size(); ++i) a(i) = N01(rng);
    const Vector dir = basis * a;
    const std::vector<Vector> xi = trace_xi(q, dir);
    double integral = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double dt = tau[k + 1] - tau[k];
      for (int i = 0; i < K; ++i) {
        const double y = k == 2 ? dt * dir(q.y_index(i, 0)) : 0.0;
        for (int e = 0; e < 2; ++e) {
          const Vector& X = xi[i + e];
          integral += 0.5 * dt / K * (X(3 * k) * X(3 * k) + std::pow(X(3 * k + 1) + y, 2));
        }
      }
    }
    const double h = (tau[3] - tau[2]) * dir(q.h_index(0));
    const double two_omega = 2.0 * omega_value(q, dir);
    const double literal = integral + h * h;
    const double endpoint = integral + xi[K](6) * xi[K](6);
    worst_literal = std::max(worst_literal, std::abs(two_omega - literal) / std::abs(literal));
    worst_endpoint = std::max(worst_endpoint, std::abs(two_omega - endpoint) / std::abs(endpoint));
  }
  c.check(worst_literal <= 1e-3,
          "2 Omega vs int(xi1^2 + (xi2+y)^2) dt + h^2 on 50 directions, 200 nodes: worst rel %.3g "
          "(<= 1e-3)",
          worst_literal);
  c.check(pos.pass && pos.c_est > 0.0,
          "check_positivity c_est = %.3g (> 0 and > 1e-6 lambda_max = %.3g)", pos.c_est,
          1e-6 * pos.lambda_max);

  double worst_identity = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Vector z0(q.dim);
    for (int i = 0; i < z0.size(); ++i) z0(i) = N01(rng);
    Matrix v(K, 1);
    for (int i = 0; i < K; ++i) v(i, 0) = N01(rng);
    const double qv = q_value(model, z0, v);
    const double om = omega_value(q, goh_transform(model, z0, v));
    worst_identity = std::max(worst_identity, std::abs(qv - om) / std::abs(qv));
  }
  c.check(worst_identity <= 1e-3, "Q = Omega transformation identity: worst rel %.3g (<= 1e-3)",
          worst_identity);

  c.info(fmt("same directions vs int(xi1^2 + (xi2+y)^2) dt + xi1(T)^2: worst rel %.3g",
             worst_endpoint));
  c.info(fmt("critical subspace dim %.0f, lambda_max %.4g", pos.nullspace_dim, pos.lambda_max) +
         fmt(", Goh asymmetry %.3g, assembly %.2f s", pos.goh_asymmetry, build_seconds));
  Matrix pinned(q.cons.rows() + 2, q.coordinates());
  pinned << q.cons, Matrix::Zero(2, q.coordinates());
  pinned(q.cons.rows(), 10) = 1.0;
  pinned(q.cons.rows() + 1, q.h_index(0)) = 1.0;
  const PositivityReport sub = check_positivity(q.hess, q.gram, pinned);
  c.info(fmt("with delta tau2 = 0 and h = 0 pinned: c_est = %.6g (pass %.0f)", sub.c_est,
             sub.pass ? 1.0 : 0.0));
  return c.report();
}

bool criterion7() {
  Criterion c(7, "structure detection");
  const ProblemDef p = regulator_problem();
  std::vector<double> t, u;
  std::vector<Vector> x;
  for (int i = 0; i < 1000; ++i) {
    t.push_back(p.horizon * i / 999.0);
    u.push_back(regulator::control(t.back()));
    x.push_back(regulator::state(t.back()));
  }
  const ArcStructure a = detect_structure(p, t, u, x);
  const bool kinds_ok = format_structure(a) == "B-,C,S";
  c.check(kinds_ok, "analytic 1000-point trajectory -> %s", format_structure(a).c_str());
  c.check(kinds_ok && std::abs(a.tau[0] - 1.2) <= 0.01 && std::abs(a.tau[1] - 2.6) <= 0.01,
          "tau guesses (%.4f, %.4f) within 0.01 of (1.2, 2.6)", kinds_ok ? a.tau[0] : NAN,
          kinds_ok ? a.tau[1] : NAN);
  const auto t0 = std::chrono::steady_clock::now();
  const DirectSolution d = direct_solve(p);
  const ArcStructure b = detect_structure(p, d.t, d.u, d.x);
  c.check(format_structure(b) == "B-,C,S", "direct_solve (grid 100) -> %s",
          format_structure(b).c_str());
  c.info(fmt("direct solve %.2f s, Euler cost %.6g", seconds_since(t0), d.cost) +
         fmt(", re-integrated control cost %.6g", d.control_cost));
  return c.report();
}

bool criterion8() {
  Criterion c(8, "property suites without the regulator");
  const BuiltinProblem& toy = find_problem("toy-bang");
  const double toy_norm =
      shooting_function(toy.problem, *toy.structure, toy.analytic(), 10).lpNorm<Eigen::Infinity>();
  c.check(toy_norm == 0.0, "toy-bang |S|_inf at the hand-derived extremal = %.3g", toy_norm);

  const ProblemDef expo = testing::linear_problem(Matrix::Identity(1, 1), Vector::Zero(1),
                                                  Vector::Ones(1), Covector::Ones(1));
  auto err = [&](int m) {
    return std::abs(
        propagate_arc(expo, ArcKind::BMinus, 1.0, Vector::Ones(1), Covector::Ones(1), m).x.back()(0) -
        std::exp(1.0));
  };
  const double ratio = err(16) / err(32);
  c.check(ratio > 14.0 && ratio < 18.0, "RK4 on x' = x: error ratio under step halving %.3f (~16)",
          ratio);

  ProblemDef reg = regulator_problem();
  ProblemDef plain = reg;
  plain.bracket = nullptr;
  ProblemDef swapped = plain;
  std::swap(swapped.f0, swapped.f1);
  std::swap(swapped.df0, swapped.df1);
  std::mt19937 rng(8);
  std::normal_distribution<double> N01;
  double anti = 0.0, fd_vs_analytic = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Vector x{{N01(rng), N01(rng), N01(rng)}};
    anti = std::max(anti, (lie_bracket(plain, Bracket::F1F0, x) +
                           lie_bracket(swapped, Bracket::F1F0, x)).norm());
    for (Bracket b : {Bracket::F1F0, Bracket::F1F0_F0, Bracket::F1F0_F1}) {
      fd_vs_analytic = std::max(fd_vs_analytic, (lie_bracket(reg, b, x) - lie_bracket(plain, b, x)).norm());
    }
  }
  c.check(anti <= 1e-12, "bracket antisymmetry |[f1,f0] + [f0,f1]| = %.3g", anti);
  c.check(fd_vs_analytic <= 1e-7, "differenced vs analytic brackets: max diff %.3g (<= 1e-7)",
          fd_vs_analytic);

  ProblemDef gp = testing::linear_problem(Matrix::Identity(2, 2), Vector{{1.0, 0.0}},
                                          Vector::Zero(2), Covector{{0.0, 1.0}});
  gp.g = [](const Vector& x) { return x(0); };
  gp.dg = [](const Vector&) { return Covector{{1.0, 0.0}}; };
  gp.f0 = [](const Vector& x) { return Vector{{x(0) * x(1) + std::sin(x(0)), x(0)}}; };
  gp.f1 = [](const Vector& x) { return Vector{{2.0 + std::cos(x(1)), 0.0}}; };
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Vector x{{N01(rng), N01(rng)}};
    Vector d{{N01(rng), N01(rng)}};
    d.normalize();
    const double h = 1e-5;
    const double fd = (gamma_control(gp, x + h * d) - gamma_control(gp, x - h * d)) / (2 * h);
    worst = std::max(worst, std::abs(gamma_gradient(gp, x).dot(d) - fd) / std::max(1.0, std::abs(fd)));
  }
  c.check(worst <= 1e-6, "Gamma gradient vs directional differences: worst rel %.3g (<= 1e-6)",
          worst);

  double nu_min = INFINITY;
  for (int i = 1; i < 50; ++i) {
    const double t = regulator::tau1 + (regulator::tau2 - regulator::tau1) * i / 50.0;
    nu_min = std::min(nu_min, constraint_multiplier_density(reg, regulator::state(t),
                                                            regulator::costate(1, t)));
  }
  c.check(nu_min > 0.0, "nu on the regulator constrained arc interior: min %.6g (> 0)", nu_min);
  return c.report();
}

}  // namespace

int main() {
  const RegulatorRun run = solve_regulator();
  bool ok = true;
  ok &= criterion1(run);
  ok &= criterion2(run);
  ok &= criterion3(run);
  ok &= criterion4(run);
  ok &= criterion5(run);
  ok &= criterion6(run);
  ok &= criterion7();
  ok &= criterion8();
  std::printf("acceptance: %s\n", ok ? "all criteria pass" : "some criteria fail");
  return ok ? 0 : 1;
}
