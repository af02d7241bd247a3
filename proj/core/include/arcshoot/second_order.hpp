#pragma once

#include <string>
#include <vector>

#include "arcshoot/arc_structure.hpp"
#include "arcshoot/problem.hpp"
#include "arcshoot/shooting.hpp"
#include "arcshoot/types.hpp"

namespace arcshoot {

// The transformed problem runs every arc simultaneously on s in [0, 1] with
// state X = (x^1, ..., x^N, tau_1, ..., tau_{N-1}) of dimension D = Nn + N - 1
// and one control per singular arc (m = |I(S)| channels). Directions of the
// Goh-transformed quadratic form are parametrised by
//
//   c = (Xi_0 [D], Y_0 [m], ..., Y_{K-1} [m], h [m])
//
// with Y piecewise constant on K uniform intervals of [0, 1].

struct SecondOrderOptions {
  int intervals = 199;  ///< K; the grid has K + 1 nodes
  /// Relative step of the central differences of first derivatives.
  double fd_step = 1e-6;
  /// Relative step of the central differences of gradients (second derivatives).
  double hessian_step = 1e-4;
  /// Relative asymmetry of H_XX above which assembly is rejected.
  double symmetry_tol = 1e-6;
  /// Singular values of the constraint matrix below null_rtol * sigma_max
  /// span the critical subspace.
  double null_rtol = 1e-9;
  /// Pass iff c_est > positivity_rtol * max |generalized eigenvalue|.
  double positivity_rtol = 1e-6;
  /// Append dg(x) Xi = 0 at every node of constrained arcs.
  bool constrained_rows = true;
};

/// Linearisation along the reference extremal, sampled on the fine grid
/// s_j = j / (2K), j = 0..2K (coarse nodes and interval midpoints).
struct LinearizedSystem {
  int dim = 0;        ///< D
  int controls = 0;   ///< m
  int intervals = 0;  ///< K
  std::vector<double> s;
  std::vector<Vector> X;
  std::vector<Vector> U;
  std::vector<Covector> P;  ///< transformed costate, zero in the tau slots
  std::vector<Matrix> A;    ///< F_X, D x D
  std::vector<Matrix> B;    ///< F_U, D x m
  std::vector<Matrix> dB;   ///< dB/ds
  std::vector<Matrix> E;    ///< A B - dB/ds
  std::vector<Matrix> Hxx;  ///< D x D
  std::vector<Matrix> Hux;  ///< m x D
  std::vector<Matrix> M;    ///< B' Hxx - dHux/ds - Hux A, m x D
  std::vector<Matrix> R;    ///< B' Hxx B - (Hux E + E' Hux') - d(Hux B)/ds, m x m
};

/// Re-propagates the extremal on the fine grid and differentiates the
/// transformed vector field and pre-Hamiltonian by central differences.
/// Time derivatives use centred differences, one-sided at s = 0 and s = 1.
/// Throws AssemblyError when H_XX is not symmetric within tolerance.
LinearizedSystem linearized_matrices(const ProblemDef& p, const ArcStructure& s,
                                     const ShootingVector& omega,
                                     const SecondOrderOptions& options = {});

struct SecondOrderModel {
  LinearizedSystem lin;
  ArcStructure structure;
  int n = 0;
  /// Hessian of the endpoint Lagrangian in (zeta_0, zeta_1), 2D x 2D.
  Matrix d2l;
  /// Jacobian of the transformed endpoint constraints (Phi, g at C entries,
  /// continuity) in (zeta_0, zeta_1).
  Matrix dphi_tilde;
  /// (coarse node i, row r) pairs imposing r Xi(s_i) = 0; r is dg(x^k_i) on
  /// the x^k block of a constrained arc k.
  std::vector<std::pair<int, Covector>> node_rows;
};

SecondOrderModel build_model(const ProblemDef& p, const ArcStructure& s,
                             const ShootingVector& omega, const SecondOrderOptions& options = {});

/// Discretised Goh-transformed form over the coordinates c described above:
/// Omega(c) = c' hess c, constraints cons c = 0, order function c' gram c.
struct QuadraticFormData {
  int dim = 0;
  int controls = 0;
  int intervals = 0;
  Matrix hess;
  Matrix cons;
  Matrix gram;
  /// Xi at coarse node i equals xi_map[i] * c.
  std::vector<Matrix> xi_map;
  double goh_asymmetry = 0.0;  ///< max over nodes of |Hux B - (Hux B)'|

  int coordinates() const { return dim + controls * (intervals + 1); }
  int y_index(int interval, int channel) const { return dim + interval * controls + channel; }
  int h_index(int channel) const { return dim + intervals * controls + channel; }
};

QuadraticFormData assemble_omega(const SecondOrderModel& model);

double omega_value(const QuadraticFormData& q, const Vector& c);

/// Xi at the coarse nodes for the direction c.
std::vector<Vector> trace_xi(const QuadraticFormData& q, const Vector& c);

/// Unreduced second variation of the transformed problem,
///   Q(V, Z) = 1/2 D2l (Z_0, Z_1)^2 + 1/2 int (Z' Hxx Z + 2 V Hux Z) ds,
/// for V piecewise constant on the K intervals (rows) and Z' = A Z + B V.
double q_value(const SecondOrderModel& model, const Vector& z0, const Matrix& v);

/// Goh transform of (V, Z_0): Y = int V sampled at interval midpoints,
/// h = Y(1), Xi_0 = Z_0.
Vector goh_transform(const SecondOrderModel& model, const Vector& z0, const Matrix& v);

struct PositivityReport {
  double c_est = 0.0;
  double lambda_max = 0.0;  ///< largest |generalized eigenvalue| on the subspace
  int nullspace_dim = 0;
  double goh_asymmetry = 0.0;
  bool pass = false;
  std::string warning;
};

/// Orthonormal basis of ker(cons) (all of R^cols when cons has no rows).
Matrix constraint_nullspace(const Matrix& cons, double null_rtol);

/// Smallest and largest-magnitude generalized eigenvalues of
/// (basis' hess basis, basis' gram basis).
std::pair<double, double> reduced_eigen_range(const Matrix& hess, const Matrix& gram,
                                              const Matrix& basis);

PositivityReport check_positivity(const Matrix& hess, const Matrix& gram, const Matrix& cons,
                                  const SecondOrderOptions& options = {});
PositivityReport check_positivity(const QuadraticFormData& q,
                                  const SecondOrderOptions& options = {});

}  // namespace arcshoot
