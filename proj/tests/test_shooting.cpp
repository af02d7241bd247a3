#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "arcshoot/builtin_problems.hpp"
#include "arcshoot/errors.hpp"
#include "arcshoot/gauss_newton.hpp"
#include "arcshoot/shooting.hpp"
#include "arcshoot/validation.hpp"
#include "regulator_fixture.hpp"
#include "test_problems.hpp"

namespace arcshoot {
namespace {

using K = ArcKind;
using testing::regulator_solution;

double inf_norm(const Vector& v) { return v.lpNorm<Eigen::Infinity>(); }

ArcStructure random_structure(std::mt19937& rng) {
  std::uniform_int_distribution<int> arcs(1, 6), kind(0, 3);
  const K kinds[] = {K::BMinus, K::BPlus, K::Constrained, K::Singular};
  ArcStructure s;
  const int n = arcs(rng);
  while (s.arcs() < n) {
    const K k = kinds[kind(rng)];
    if (!s.kinds.empty() && s.kinds.back() == k) continue;
    s.kinds.push_back(k);
  }
  for (int i = 1; i < n; ++i) s.tau.push_back(5.0 * i / n);
  return s;
}

TEST(ShootingLayout, DimensionLawOnRandomStructures) {
  const ProblemDef p = regulator_problem();
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const ArcStructure s = random_structure(rng);
    ASSERT_NO_THROW(validate_structure(p, s));
    const ShootingLayout l = ShootingLayout::of(p, s);
    const int singular = static_cast<int>(index_sets(s).singular.size());
    EXPECT_EQ(l.equations() - l.unknowns(), 2 * singular);

    ShootingVector w;
    for (int k = 0; k < s.arcs(); ++k) {
      w.x0.push_back(Vector{{0.1, -0.2, 0.0}});
      w.p0.push_back(Covector{{0.1, 0.1, 1.0}});
    }
    w.tau = s.tau;
    w.psi = Covector::Zero(3);
    w.gamma = Vector::Zero(l.constrained);
    EXPECT_EQ(w.pack().size(), l.unknowns());
    const Vector r = shooting_function(p, s, w, 5);
    EXPECT_EQ(r.size() - w.pack().size(), 2 * singular) << format_structure(s);
  }
}

TEST(ShootingVector, PackUnpackRoundTrip) {
  const BuiltinProblem& b = find_problem("regulator");
  const ShootingVector w = b.analytic();
  const ShootingLayout l = ShootingLayout::of(b.problem, *b.structure);
  const Vector flat = w.pack();
  ASSERT_EQ(flat.size(), l.unknowns());
  EXPECT_EQ(ShootingVector::unpack(flat, l).pack(), flat);
  // packing order: x0^1..x0^N, tau, p0^1..p0^N, Psi, gamma
  EXPECT_EQ(flat(9), w.tau[0]);
  EXPECT_EQ(flat(11), w.p0[0](0));
  EXPECT_EQ(flat(flat.size() - 1), w.gamma(0));
  EXPECT_THROW(ShootingVector::unpack(flat.head(5), l), ConfigurationError);
}

TEST(ShootingFunction, ToyBangExactZero) {
  const BuiltinProblem& b = find_problem("toy-bang");
  const Vector r = shooting_function(b.problem, *b.structure, b.analytic(), 10);
  EXPECT_EQ(r.size(), 3);
  EXPECT_EQ(inf_norm(r), 0.0);
}

TEST(ShootingFunction, ToyBangZeroOnlyAtExtremal) {
  const BuiltinProblem& b = find_problem("toy-bang");
  const ShootingVector w = b.analytic();
  for (double dx : {-0.1, 0.0, 0.1}) {
    for (double dp : {-0.1, 0.0, 0.1}) {
      for (double dpsi : {-0.1, 0.0, 0.1}) {
        ShootingVector v = w;
        v.x0[0](0) += dx;
        v.p0[0](0) += dp;
        v.psi(0) += dpsi;
        const double norm = inf_norm(shooting_function(b.problem, *b.structure, v, 10));
        if (dx == 0.0 && dp == 0.0 && dpsi == 0.0) {
          EXPECT_EQ(norm, 0.0);
        } else {
          EXPECT_GT(norm, 0.0);
        }
      }
    }
  }
}

TEST(ShootingFunction, ContinuityBlocksVanishForChainedArcs) {
  const BuiltinProblem& b = find_problem("regulator");
  const ArcStructure s = *b.structure;
  ShootingVector w = b.analytic();
  w.gamma.setZero();
  w.tau = {1.0, 3.0};
  const int steps = 40;
  const double t[] = {0.0, 1.0, 3.0, 5.0};
  for (int k = 0; k + 1 < s.arcs(); ++k) {
    const ArcGrid g = propagate_arc(b.problem, s.kinds[k], t[k + 1] - t[k], w.x0[k], w.p0[k], steps);
    w.x0[k + 1] = g.x.back();
    w.p0[k + 1] = g.p.back();
  }
  const Vector r = shooting_function(b.problem, s, w, steps);
  const int n = 3, q = 3, c = 1;
  EXPECT_EQ(r.segment(q + c, 2 * n).norm(), 0.0);
  EXPECT_EQ(r.segment(q + c + 3 * n, 2 * n).norm(), 0.0);
}

TEST(ShootingFunction, AnalyticRegulatorExtremal) {
  const BuiltinProblem& b = find_problem("regulator");
  const Vector r = shooting_function(b.problem, *b.structure, b.analytic(),
                                     steps_per_arc_for(1000, 3));
  EXPECT_LT(inf_norm(r), 1e-10);
}

TEST(ShootingJacobian, MatchesHandAssemblyOnLinearProblem) {
  // x' = A x - b (B- arc), A nilpotent so that the costate map is p0 (I - A T)
  const Matrix A{{0.0, 1.0}, {0.0, 0.0}};
  const ProblemDef p = testing::linear_problem(A, Vector{{0.0, 1.0}}, Vector{{1.0, 0.0}},
                                               Covector{{2.0, -1.0}});
  const ArcStructure s{{K::BMinus}, {}};
  ShootingVector w;
  w.x0 = {Vector{{0.3, 0.4}}};
  w.p0 = {Covector{{0.5, -0.2}}};
  w.psi = Covector{{0.1, 0.7}};
  w.gamma = Vector::Zero(0);

  Matrix expected = Matrix::Zero(6, 6);
  expected.block(0, 0, 2, 2).setIdentity();  // Phi = x0 - x_init
  expected.block(2, 2, 2, 2).setIdentity();  // p0 + Psi
  expected.block(2, 4, 2, 2).setIdentity();
  expected.block(4, 2, 2, 2) = (Matrix::Identity(2, 2) - A).transpose();  // p(1) - c
  const Matrix J = shooting_jacobian(p, s, w, 10);
  EXPECT_LT((J - expected).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(ShootingJacobian, GammaBlockAbsentWithoutConstrainedArcs) {
  const ProblemDef p = regulator_problem();
  const ArcStructure s{{K::BMinus, K::Singular}, {2.0}};
  const ShootingLayout l = ShootingLayout::of(p, s);
  EXPECT_EQ(l.constrained, 0);
  EXPECT_EQ(l.unknowns(), 2 * 2 * 3 + 1 + 3);
  ShootingVector w;
  w.x0 = {Vector{{0.0, 1.0, 0.0}}, Vector{{0.1, -0.2, 0.0}}};
  w.p0 = {Covector{{1.0, 1.0, 1.0}}, Covector{{0.1, 0.0, 1.0}}};
  w.tau = {2.0};
  w.psi = Covector::Zero(3);
  w.gamma = Vector::Zero(0);
  const Matrix J = shooting_jacobian(p, s, w, 20);
  EXPECT_EQ(J.rows(), l.equations());
  EXPECT_EQ(J.cols(), l.unknowns());
}

TEST(ShootingJacobian, ParallelColumnsMatchSerial) {
  const BuiltinProblem& b = find_problem("regulator");
  const ShootingVector w = b.analytic();
  EXPECT_EQ(shooting_jacobian(b.problem, *b.structure, w, 30, false),
            shooting_jacobian(b.problem, *b.structure, w, 30, true));
}

TEST(ShootingJacobian, FailingColumnIsNamed) {
  const ResidualFunction f = [](const Vector& y) {
    if (y(1) != 2.0) throw std::runtime_error("stencil left the domain");
    return Vector(y);
  };
  try {
    fd_jacobian(f, Vector{{1.0, 2.0, 3.0}});
    FAIL() << "expected JacobianColumnError";
  } catch (const JacobianColumnError& e) {
    EXPECT_EQ(e.column(), 1);
  }
}

TEST(GaussNewton, AffineResidualInOneStep) {
  const ResidualFunction f = [](const Vector& y) { return Vector{{y(0) - 1.0, 2.0 * (y(0) - 1.0)}}; };
  const GaussNewtonResult r = gauss_newton(f, Vector::Constant(1, 7.5));
  EXPECT_TRUE(r.report.converged);
  EXPECT_EQ(r.report.iterations.size(), 1u);
  EXPECT_NEAR(r.solution(0), 1.0, 1e-12);
}

TEST(GaussNewton, QuadraticErrorContraction) {
  // exact recursion e+ = 2 y e^2 / (4 y^2 + 1) <= 0.25 e^2 near y = 2
  const ResidualFunction f = [](const Vector& y) { return Vector{{y(0) * y(0) - 4.0, y(0) - 2.0}}; };
  Vector y = Vector::Constant(1, 3.0);
  double e = 1.0;
  int steps = 0;
  while (e > 1e-7 && steps < 10) {
    y += gauss_newton_step(fd_jacobian(f, y), f(y), 1e-10);
    const double next = std::abs(y(0) - 2.0);
    EXPECT_LE(next, 0.25 * e * e + 1e-12) << "step " << steps;
    e = next;
    ++steps;
  }
  EXPECT_LE(e, 1e-7);
  const GaussNewtonResult r = gauss_newton(f, Vector::Constant(1, 3.0));
  ASSERT_TRUE(r.report.order_estimate.has_value());
  EXPECT_GE(*r.report.order_estimate, 1.7);
}

TEST(GaussNewton, RankDeficiencyIsReported) {
  const ResidualFunction f = [](const Vector& y) {
    const double s = y(0) + y(1) - 1.0;
    return Vector{{s, 2.0 * s}};
  };
  try {
    gauss_newton(f, Vector{{3.0, 4.0}});
    FAIL() << "expected RankDeficientJacobian";
  } catch (const RankDeficientJacobian& e) {
    EXPECT_EQ(e.rank(), 1);
    EXPECT_EQ(e.columns(), 2);
  }
}

TEST(GaussNewton, IterationBudgetCarriesBestIterate) {
  const ResidualFunction f = [](const Vector& y) { return Vector::Constant(1, std::exp(y(0))); };
  GaussNewtonOptions o;
  o.max_iter = 5;
  try {
    gauss_newton(f, Vector::Zero(1), o);
    FAIL() << "expected MaxIterExceeded";
  } catch (const MaxIterExceeded& e) {
    EXPECT_NEAR(e.best_iterate()(0), -5.0, 1e-6);
  }
}

TEST(GaussNewton, OrderEstimate) {
  const std::vector<double> quadratic{1e-1, 1e-2, 1e-4};
  EXPECT_NEAR(*estimate_order(quadratic), 2.0, 1e-12);
  const std::vector<double> short_history{1e-1, 1e-2};
  EXPECT_FALSE(estimate_order(short_history).has_value());
}

TEST(Regulator, ConvergesFromPerturbedGuess) {
  const ShootingSolution& sol = regulator_solution();
  EXPECT_TRUE(sol.report.converged);
  EXPECT_LE(sol.report.iterations.size(), 10u);
  EXPECT_LE(sol.report.final_residual, 1e-6);
  EXPECT_NEAR(sol.omega.tau[0], regulator::tau1, 1e-6);
  EXPECT_NEAR(sol.omega.tau[1], regulator::tau2, 1e-6);
  // value of the exact extremal, to be compared with the closed form
  EXPECT_NEAR(sol.cost, 0.392501333, 1e-8);
  EXPECT_NEAR(regulator::cost(), 0.392501333, 1e-9);
  EXPECT_NEAR(sol.omega.gamma(0), 0.287466667, 1e-6);
  ASSERT_TRUE(sol.report.order_estimate.has_value());
  EXPECT_GE(*sol.report.order_estimate, 1.7);
}

TEST(Regulator, JacobianHasFullColumnRank) {
  const ShootingSolution& sol = regulator_solution();
  EXPECT_EQ(sol.report.jacobian_rank, sol.report.unknowns);
  EXPECT_GT(sol.report.smallest_singular_value, 1e-6);
}

TEST(Regulator, PhiScalingRescalesOnlyPsi) {
  const BuiltinProblem& b = find_problem("regulator");
  ProblemDef scaled = b.problem;
  const double c = 3.0;
  scaled.Phi = [base = b.problem.Phi, c](const Vector& x0, const Vector& xT) {
    return Vector(c * base(x0, xT));
  };
  scaled.dPhi = [base = b.problem.dPhi, c](const Vector& x0, const Vector& xT) {
    auto [a, d] = base(x0, xT);
    return std::pair{Matrix(c * a), Matrix(c * d)};
  };
  const ShootingOptions o = testing::regulator_options();
  const ShootingSolution ref = solve_shooting(b.problem, *b.structure, b.analytic(), o);
  const ShootingSolution sol = solve_shooting(scaled, *b.structure, b.analytic(), o);
  for (int k = 0; k < 3; ++k) {
    EXPECT_LT((sol.omega.x0[k] - ref.omega.x0[k]).norm(), 1e-8);
    EXPECT_LT((sol.omega.p0[k] - ref.omega.p0[k]).norm(), 1e-8);
  }
  for (int k = 0; k < 2; ++k) EXPECT_NEAR(sol.omega.tau[k], ref.omega.tau[k], 1e-8);
  EXPECT_LT((sol.omega.psi - ref.omega.psi / c).norm(), 1e-8);
}

TEST(Regulator, ValidationPasses) {
  const BuiltinProblem& b = find_problem("regulator");
  const ShootingSolution& sol = regulator_solution();
  const ValidationReport v = validate_solution(b.problem, sol.structure, sol.trajectory);
  EXPECT_TRUE(v.pass());
  EXPECT_GT(v.control_margin, 0.5);
  ASSERT_EQ(v.junctions.size(), 2u);
  EXPECT_NEAR(v.junctions[1].control_jump, 0.2, 1e-6);
  for (const JunctionReport& j : v.junctions) EXPECT_LE(j.hamiltonian_mismatch, 1e-6);
  for (double h : v.hamiltonian_variation) EXPECT_LE(h, 1e-6);
  EXPECT_GE(v.nu_min, -1e-8);
  EXPECT_LE(v.g_max, 1e-8);
  EXPECT_TRUE(v.first_order.pass);
  EXPECT_EQ(v.legendre_clebsch.legendre_clebsch_violations, 0);

  // nu is strictly positive away from the exit junction
  const ArcGrid& c = sol.trajectory.arcs[1];
  for (int i = 0; i + 10 < c.steps(); ++i) {
    EXPECT_GT(constraint_multiplier_density(b.problem, c.x[i], c.p[i]), 0.0);
  }
}

TEST(Regulator, SingularFeedbackConsistency) {
  const BuiltinProblem& b = find_problem("regulator");
  const ArcGrid& s = regulator_solution().trajectory.arcs[2];
  for (int i = 0; i <= s.steps(); ++i) {
    const double a = s.p[i].dot(lie_bracket(b.problem, Bracket::F1F0_F0, s.x[i]));
    const double d = s.p[i].dot(lie_bracket(b.problem, Bracket::F1F0_F1, s.x[i]));
    EXPECT_LE(std::abs(a + s.w[i] * d), 1e-8 * (1.0 + std::abs(a)));
    EXPECT_NEAR(s.w[i], s.x[i](0), 1e-8);
  }
}

TEST(Validation, FindingsOnBadTrajectory) {
  // B- then S for the regulator with a singular control pushed onto the bound
  const ProblemDef p = regulator_problem();
  const ArcStructure s{{K::BMinus, K::Singular}, {1.0}};
  ShootingVector w;
  w.x0 = {Vector{{0.0, 1.0, 0.0}}, Vector{{-1.0, 0.5, 0.0}}};
  w.p0 = {Covector{{1.0, 1.0, 1.0}}, Covector{{0.0, 0.0, 1.0}}};
  w.tau = {1.0};
  w.psi = Covector::Zero(3);
  w.gamma = Vector::Zero(0);
  const TPTrajectory traj = propagate(p, s, w, 20);
  const ValidationReport v = validate_solution(p, s, traj);
  EXPECT_FALSE(v.pass());
  EXPECT_LT(v.control_margin, 1e-6);
}

}  // namespace
}  // namespace arcshoot
