#include "arcshoot/second_order.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "arcshoot/errors.hpp"
#include "arcshoot/gauss_newton.hpp"
#include "arcshoot/tp_dynamics.hpp"

namespace arcshoot {

namespace {

// Transformed vector field, pre-Hamiltonian and their analytic pieces on the
// stacked state X = (x^1..x^N, tau_1..tau_{N-1}).
struct TransformedMaps {
  const ProblemDef& p;
  const ArcStructure& s;
  int n = 0;
  int N = 0;
  int D = 0;
  int m = 0;
  std::vector<int> channel;  // control channel of each arc, -1 when eliminated
  std::vector<int> singular;

  TransformedMaps(const ProblemDef& prob, const ArcStructure& st) : p(prob), s(st) {
    n = p.n;
    N = s.arcs();
    D = N * n + N - 1;
    channel.assign(N, -1);
    for (int k = 0; k < N; ++k) {
      if (s.kinds[k] == ArcKind::Singular) {
        channel[k] = static_cast<int>(singular.size());
        singular.push_back(k);
      }
    }
    m = static_cast<int>(singular.size());
  }

  double boundary(const Vector& X, int k) const {
    if (k == 0) return 0.0;
    if (k == N) return p.horizon;
    return X(N * n + k - 1);
  }
  double dt(const Vector& X, int k) const { return boundary(X, k + 1) - boundary(X, k); }
  Vector x(const Vector& X, int k) const { return X.segment(k * n, n); }
  Covector costate(const Covector& P, int k) const { return P.segment(k * n, n); }

  double control(const Vector& X, const Vector& U, int k) const {
    if (channel[k] >= 0) return U(channel[k]);
    return arc_control(p, s.kinds[k], x(X, k), Covector::Zero(n));
  }

  Vector field(const Vector& X, const Vector& U) const {
    Vector F = Vector::Zero(D);
    for (int k = 0; k < N; ++k) {
      const Vector xk = x(X, k);
      F.segment(k * n, n) = dt(X, k) * (p.f0(xk) + control(X, U, k) * p.f1(xk));
    }
    return F;
  }

  Matrix field_u(const Vector& X) const {
    Matrix B = Matrix::Zero(D, m);
    for (int j = 0; j < m; ++j) {
      const int k = singular[j];
      B.block(k * n, j, n, 1) = dt(X, k) * p.f1(x(X, k));
    }
    return B;
  }

  double arc_h(const Vector& X, const Vector& U, const Covector& P, int k) const {
    const Vector xk = x(X, k);
    return costate(P, k).dot(p.f0(xk) + control(X, U, k) * p.f1(xk));
  }

  // D_X of sum_k dt_k H^k with U and P frozen.
  Covector gradient(const Vector& X, const Vector& U, const Covector& P) const {
    Covector g = Covector::Zero(D);
    for (int k = 0; k < N; ++k) {
      const Vector xk = x(X, k);
      const Covector pk = costate(P, k);
      const double w = control(X, U, k);
      Covector gk = pk * (p.df0(xk) + w * p.df1(xk));
      if (s.kinds[k] == ArcKind::Constrained) gk += pk.dot(p.f1(xk)) * gamma_gradient(p, xk);
      g.segment(k * n, n) = dt(X, k) * gk;
    }
    for (int t = 1; t < N; ++t) g(N * n + t - 1) = arc_h(X, U, P, t - 1) - arc_h(X, U, P, t);
    return g;
  }

  Vector h_u(const Vector& X, const Covector& P) const {
    Vector hu(m);
    for (int j = 0; j < m; ++j) {
      const int k = singular[j];
      hu(j) = dt(X, k) * costate(P, k).dot(p.f1(x(X, k)));
    }
    return hu;
  }
};

template <class F>
Matrix central_jacobian(F&& f, const Vector& y, double rel) {
  const Vector f0 = f(y);
  Matrix J(f0.size(), y.size());
  for (int i = 0; i < y.size(); ++i) {
    const double h = rel * std::max(1.0, std::abs(y(i)));
    Vector yp = y;
    Vector ym = y;
    yp(i) += h;
    ym(i) -= h;
    J.col(i) = (f(yp) - f(ym)) / (yp(i) - ym(i));
  }
  return J;
}

// d/ds on the uniform fine grid; second-order one-sided at both ends.
std::vector<Matrix> time_derivative(const std::vector<Matrix>& v, double ds) {
  const int last = static_cast<int>(v.size()) - 1;
  std::vector<Matrix> d(v.size());
  if (last < 2) {
    for (auto& m : d) m = Matrix::Zero(v.front().rows(), v.front().cols());
    return d;
  }
  d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * ds);
  d[last] = (3.0 * v[last] - 4.0 * v[last - 1] + v[last - 2]) / (2.0 * ds);
  for (int j = 1; j < last; ++j) d[j] = (v[j + 1] - v[j - 1]) / (2.0 * ds);
  return d;
}

Matrix symmetric_part(const Matrix& a) { return 0.5 * (a + a.transpose()); }

}  // namespace

LinearizedSystem linearized_matrices(const ProblemDef& p, const ArcStructure& s,
                                     const ShootingVector& omega,
                                     const SecondOrderOptions& options) {
  if (options.intervals < 2) throw ConfigurationError("second-order grid needs >= 2 intervals");
  validate_structure(p, s);
  const TransformedMaps tp(p, s);
  const int K = options.intervals;
  const int fine = 2 * K;
  const TPTrajectory traj = propagate(p, s, omega, fine);

  LinearizedSystem lin;
  lin.dim = tp.D;
  lin.controls = tp.m;
  lin.intervals = K;
  const double ds = 1.0 / fine;

  for (int j = 0; j <= fine; ++j) {
    Vector X(tp.D);
    Covector P = Covector::Zero(tp.D);
    for (int k = 0; k < tp.N; ++k) {
      X.segment(k * tp.n, tp.n) = traj.arcs[k].x[j];
      P.segment(k * tp.n, tp.n) = traj.arcs[k].p[j];
    }
    for (int t = 0; t + 1 < tp.N; ++t) X(tp.N * tp.n + t) = omega.tau[t];
    Vector U(tp.m);
    for (int c = 0; c < tp.m; ++c) U(c) = traj.arcs[tp.singular[c]].w[j];

    lin.s.push_back(traj.arcs.front().s[j]);
    lin.A.push_back(
        central_jacobian([&](const Vector& y) { return tp.field(y, U); }, X, options.fd_step));
    lin.B.push_back(tp.field_u(X));

    Matrix hxx = central_jacobian(
        [&](const Vector& y) { return Vector(tp.gradient(y, U, P).transpose()); }, X,
        options.hessian_step);
    const double asym = (hxx - hxx.transpose()).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, hxx.cwiseAbs().maxCoeff());
    if (asym > options.symmetry_tol * scale) {
      throw AssemblyError("H_XX is not symmetric at s = " + std::to_string(lin.s.back()) +
                          " (asymmetry " + std::to_string(asym) + ")");
    }
    lin.Hxx.push_back(symmetric_part(hxx));
    lin.Hux.push_back(central_jacobian([&](const Vector& y) { return tp.h_u(y, P); }, X,
                                       options.hessian_step));
    lin.X.push_back(std::move(X));
    lin.U.push_back(std::move(U));
    lin.P.push_back(std::move(P));
  }

  lin.dB = time_derivative(lin.B, ds);
  const std::vector<Matrix> dHux = time_derivative(lin.Hux, ds);
  std::vector<Matrix> huxb;
  for (int j = 0; j <= fine; ++j) huxb.push_back(lin.Hux[j] * lin.B[j]);
  const std::vector<Matrix> dHuxB = time_derivative(huxb, ds);

  for (int j = 0; j <= fine; ++j) {
    lin.E.push_back(lin.A[j] * lin.B[j] - lin.dB[j]);
    lin.M.push_back(lin.B[j].transpose() * lin.Hxx[j] - dHux[j] - lin.Hux[j] * lin.A[j]);
    const Matrix he = lin.Hux[j] * lin.E[j];
    lin.R.push_back(symmetric_part(lin.B[j].transpose() * lin.Hxx[j] * lin.B[j] - he -
                                   he.transpose() - dHuxB[j]));
  }
  return lin;
}

SecondOrderModel build_model(const ProblemDef& p, const ArcStructure& s,
                             const ShootingVector& omega, const SecondOrderOptions& options) {
  SecondOrderModel model;
  model.lin = linearized_matrices(p, s, omega, options);
  model.structure = s;
  model.n = p.n;

  const TransformedMaps tp(p, s);
  const int D = tp.D;
  const int n = tp.n;
  const int N = tp.N;
  const IndexSets sets = index_sets(s);

  Vector zeta(2 * D);
  zeta << model.lin.X.front(), model.lin.X.back();

  auto lagrangian_gradient = [&](const Vector& z) {
    const Vector xa = z.segment(0, n);
    const Vector xb = z.segment(D + (N - 1) * n, n);
    Vector g = Vector::Zero(2 * D);
    auto [d0, d1] = p.dphi(xa, xb);
    if (p.q > 0) {
      auto [j0, j1] = p.dPhi(xa, xb);
      d0 += omega.psi * j0;
      d1 += omega.psi * j1;
    }
    g.segment(0, n) += d0.transpose();
    g.segment(D + (N - 1) * n, n) += d1.transpose();
    for (std::size_t c = 0; c < sets.constrained.size(); ++c) {
      const int k = sets.constrained[c];
      g.segment(k * n, n) += omega.gamma(c) * p.dg(z.segment(k * n, n)).transpose();
    }
    return g;
  };
  model.d2l = symmetric_part(central_jacobian(lagrangian_gradient, zeta, options.hessian_step));

  const ResidualFunction phi_tilde = [&](const Vector& z) {
    const Vector xa = z.segment(0, n);
    const Vector xb = z.segment(D + (N - 1) * n, n);
    Vector r(p.q + static_cast<int>(sets.constrained.size()) + n * (N - 1));
    int at = 0;
    if (p.q > 0) {
      r.segment(0, p.q) = p.Phi(xa, xb);
      at = p.q;
    }
    for (int k : sets.constrained) r(at++) = p.g(z.segment(k * n, n));
    for (int k = 0; k + 1 < N; ++k) {
      r.segment(at, n) = z.segment(D + k * n, n) - z.segment((k + 1) * n, n);
      at += n;
    }
    return r;
  };
  model.dphi_tilde = fd_jacobian(phi_tilde, zeta);

  if (options.constrained_rows) {
    for (int k : sets.constrained) {
      for (int i = 0; i <= model.lin.intervals; ++i) {
        Covector row = Covector::Zero(D);
        row.segment(k * n, n) = p.dg(model.lin.X[2 * i].segment(k * n, n));
        model.node_rows.emplace_back(i, std::move(row));
      }
    }
  }
  return model;
}

QuadraticFormData assemble_omega(const SecondOrderModel& model) {
  const LinearizedSystem& lin = model.lin;
  QuadraticFormData q;
  q.dim = lin.dim;
  q.controls = lin.controls;
  q.intervals = lin.intervals;
  const int D = q.dim;
  const int m = q.controls;
  const int K = q.intervals;
  const int nc = q.coordinates();
  const double step = 1.0 / K;

  // Forcing E(s) Y_i expressed on the coordinates: nonzero only in the
  // columns of interval i.
  auto forcing = [&](int fine, int interval) {
    Matrix f = Matrix::Zero(D, nc);
    if (m > 0) f.middleCols(q.y_index(interval, 0), m) = lin.E[fine];
    return f;
  };

  q.xi_map.reserve(K + 1);
  Matrix S = Matrix::Zero(D, nc);
  S.leftCols(D).setIdentity();
  q.xi_map.push_back(S);
  for (int i = 0; i < K; ++i) {
    const int a = 2 * i;
    const Matrix k1 = lin.A[a] * S + forcing(a, i);
    const Matrix k2 = lin.A[a + 1] * (S + 0.5 * step * k1) + forcing(a + 1, i);
    const Matrix k3 = lin.A[a + 1] * (S + 0.5 * step * k2) + forcing(a + 1, i);
    const Matrix k4 = lin.A[a + 2] * (S + step * k3) + forcing(a + 2, i);
    S += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    q.xi_map.push_back(S);
  }

  Matrix integral = Matrix::Zero(nc, nc);
  for (int i = 0; i < K; ++i) {
    for (int end = 0; end < 2; ++end) {
      const int node = i + end;
      const int fine = 2 * node;
      const Matrix& Si = q.xi_map[node];
      integral += 0.5 * step * (Si.transpose() * lin.Hxx[fine] * Si);
      if (m > 0) {
        const int y = q.y_index(i, 0);
        const Matrix ms = lin.M[fine] * Si;
        integral.middleRows(y, m) += 0.5 * step * ms;
        integral.middleCols(y, m) += 0.5 * step * ms.transpose();
        integral.block(y, y, m, m) += 0.5 * step * lin.R[fine];
      }
    }
  }

  // Endpoint term rho(Xi_0, Xi_1, h).
  const int last = 2 * K;
  Matrix zeta(2 * D, nc);
  zeta.topRows(D) = Matrix::Zero(D, nc);
  zeta.topRows(D).leftCols(D).setIdentity();
  zeta.bottomRows(D) = q.xi_map.back();
  if (m > 0) zeta.bottomRows(D).middleCols(q.h_index(0), m) += lin.B[last];
  Matrix rho = zeta.transpose() * model.d2l * zeta;
  if (m > 0) {
    const int h = q.h_index(0);
    const Matrix cross = lin.Hux[last] * q.xi_map.back();
    rho.middleRows(h, m) += cross;
    rho.middleCols(h, m) += cross.transpose();
    rho.block(h, h, m, m) += symmetric_part(lin.Hux[last] * lin.B[last]);
  }

  q.hess = symmetric_part(0.5 * rho + 0.5 * integral);

  q.gram = Matrix::Identity(nc, nc);
  for (int i = 0; i < K; ++i) {
    for (int c = 0; c < m; ++c) q.gram(q.y_index(i, c), q.y_index(i, c)) = step;
  }

  const int endpoint_rows = static_cast<int>(model.dphi_tilde.rows());
  q.cons.resize(endpoint_rows + static_cast<int>(model.node_rows.size()), nc);
  if (endpoint_rows > 0) q.cons.topRows(endpoint_rows) = model.dphi_tilde * zeta;
  for (std::size_t r = 0; r < model.node_rows.size(); ++r) {
    const auto& [node, row] = model.node_rows[r];
    q.cons.row(endpoint_rows + static_cast<int>(r)) = row * q.xi_map[node];
  }

  for (std::size_t j = 0; j < lin.Hux.size(); ++j) {
    const Matrix hb = lin.Hux[j] * lin.B[j];
    if (hb.size() > 0) {
      q.goh_asymmetry = std::max(q.goh_asymmetry, (hb - hb.transpose()).cwiseAbs().maxCoeff());
    }
  }
  return q;
}

double omega_value(const QuadraticFormData& q, const Vector& c) {
  if (c.size() != q.coordinates()) throw ConfigurationError("direction has the wrong length");
  return c.dot(q.hess * c);
}

std::vector<Vector> trace_xi(const QuadraticFormData& q, const Vector& c) {
  if (c.size() != q.coordinates()) throw ConfigurationError("direction has the wrong length");
  std::vector<Vector> xi;
  xi.reserve(q.xi_map.size());
  for (const Matrix& S : q.xi_map) xi.push_back(S * c);
  return xi;
}

double q_value(const SecondOrderModel& model, const Vector& z0, const Matrix& v) {
  const LinearizedSystem& lin = model.lin;
  const int K = lin.intervals;
  if (z0.size() != lin.dim || v.rows() != K || v.cols() != lin.controls) {
    throw ConfigurationError("q_value: direction does not match the grid");
  }
  const double step = 1.0 / K;
  std::vector<Vector> z{z0};
  for (int i = 0; i < K; ++i) {
    const int a = 2 * i;
    const Vector vi = v.row(i).transpose();
    const Vector& Z = z.back();
    const Vector k1 = lin.A[a] * Z + lin.B[a] * vi;
    const Vector k2 = lin.A[a + 1] * (Z + 0.5 * step * k1) + lin.B[a + 1] * vi;
    const Vector k3 = lin.A[a + 1] * (Z + 0.5 * step * k2) + lin.B[a + 1] * vi;
    const Vector k4 = lin.A[a + 2] * (Z + step * k3) + lin.B[a + 2] * vi;
    z.push_back(Z + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  }
  double integral = 0.0;
  for (int i = 0; i < K; ++i) {
    const Vector vi = v.row(i).transpose();
    for (int end = 0; end < 2; ++end) {
      const int node = i + end;
      const Vector& Z = z[node];
      integral += 0.5 * step *
                  (Z.dot(lin.Hxx[2 * node] * Z) + 2.0 * vi.dot(lin.Hux[2 * node] * Z));
    }
  }
  Vector zeta(2 * lin.dim);
  zeta << z.front(), z.back();
  return 0.5 * zeta.dot(model.d2l * zeta) + 0.5 * integral;
}

Vector goh_transform(const SecondOrderModel& model, const Vector& z0, const Matrix& v) {
  const LinearizedSystem& lin = model.lin;
  const int K = lin.intervals;
  const int m = lin.controls;
  if (z0.size() != lin.dim || v.rows() != K || v.cols() != m) {
    throw ConfigurationError("goh_transform: direction does not match the grid");
  }
  const double step = 1.0 / K;
  Vector c = Vector::Zero(lin.dim + m * (K + 1));
  c.head(lin.dim) = z0;
  Vector y = Vector::Zero(m);
  for (int i = 0; i < K; ++i) {
    const Vector vi = v.row(i).transpose();
    c.segment(lin.dim + i * m, m) = y + 0.5 * step * vi;
    y += step * vi;
  }
  c.tail(m) = y;
  return c;
}

Matrix constraint_nullspace(const Matrix& cons, double null_rtol) {
  const int cols = static_cast<int>(cons.cols());
  if (cons.rows() == 0) return Matrix::Identity(cols, cols);
  Eigen::BDCSVD<Matrix> svd(cons, Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (smax > 0.0 && sv(i) > null_rtol * smax) ++rank;
  }
  return svd.matrixV().rightCols(cols - rank);
}

std::pair<double, double> reduced_eigen_range(const Matrix& hess, const Matrix& gram,
                                              const Matrix& basis) {
  const Matrix hr = symmetric_part(basis.transpose() * hess * basis);
  const Matrix gr = symmetric_part(basis.transpose() * gram * basis);
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(hr, gr, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw AssemblyError("generalized eigenproblem failed (order-function Gram not definite?)");
  }
  const Vector& ev = es.eigenvalues();
  return {ev(0), std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)))};
}

PositivityReport check_positivity(const Matrix& hess, const Matrix& gram, const Matrix& cons,
                                  const SecondOrderOptions& options) {
  if (hess.rows() != hess.cols() || gram.rows() != hess.rows() || gram.cols() != hess.cols() ||
      (cons.rows() > 0 && cons.cols() != hess.cols())) {
    throw ConfigurationError("check_positivity: inconsistent matrix sizes");
  }
  PositivityReport r;
  const Matrix basis = constraint_nullspace(cons, options.null_rtol);
  r.nullspace_dim = static_cast<int>(basis.cols());
  if (r.nullspace_dim == 0) {
    r.c_est = std::numeric_limits<double>::infinity();
    r.pass = true;
    r.warning = "critical subspace is trivial; positivity holds vacuously";
    return r;
  }
  std::tie(r.c_est, r.lambda_max) = reduced_eigen_range(hess, gram, basis);
  r.pass = r.c_est > options.positivity_rtol * r.lambda_max;
  return r;
}

PositivityReport check_positivity(const QuadraticFormData& q, const SecondOrderOptions& options) {
  PositivityReport r = check_positivity(q.hess, q.gram, q.cons, options);
  r.goh_asymmetry = q.goh_asymmetry;
  return r;
}

}  // namespace arcshoot
