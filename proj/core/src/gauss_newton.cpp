#include "arcshoot/gauss_newton.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "arcshoot/errors.hpp"

namespace arcshoot {

std::vector<double> ConvergenceReport::residual_history() const {
  std::vector<double> h{initial_residual};
  for (const auto& it : iterations) h.push_back(it.residual_norm);
  return h;
}

Matrix fd_jacobian(const ResidualFunction& f, const Vector& y, bool parallel) {
  const double root_eps = std::sqrt(std::numeric_limits<double>::epsilon());
  const int cols = static_cast<int>(y.size());

  std::vector<Vector> columns(cols);
  std::vector<std::exception_ptr> errors(cols);
  auto column = [&](int i) {
    try {
      const double h = root_eps * std::max(1.0, std::abs(y(i)));
      Vector yp = y;
      Vector ym = y;
      yp(i) += h;
      ym(i) -= h;
      columns[i] = (f(yp) - f(ym)) / (yp(i) - ym(i));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  if (parallel && cols > 1) {
    const int workers =
        std::max(1, std::min<int>(cols, static_cast<int>(std::thread::hardware_concurrency())));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int i = w; i < cols; i += workers) column(i);
      });
    }
    for (auto& t : pool) t.join();
  } else {
    for (int i = 0; i < cols; ++i) column(i);
  }

  for (int i = 0; i < cols; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw JacobianColumnError(i, e.what());
    }
  }
  const int rows = cols ? static_cast<int>(columns.front().size()) : 0;
  Matrix jac(rows, cols);
  for (int i = 0; i < cols; ++i) {
    if (columns[i].size() != rows) throw JacobianColumnError(i, "inconsistent residual size");
    jac.col(i) = columns[i];
  }
  return jac;
}

Vector gauss_newton_step(const Matrix& jacobian, const Vector& residual, double rank_rtol) {
  Eigen::BDCSVD<Matrix> svd(jacobian, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  svd.setThreshold(rank_rtol);
  if (smax == 0.0) return Vector::Zero(jacobian.cols());
  return -svd.solve(residual);
}

std::optional<double> estimate_order(std::span<const double> history) {
  if (history.size() < 3) return std::nullopt;
  const double r2 = history[history.size() - 1];
  const double r1 = history[history.size() - 2];
  const double r0 = history[history.size() - 3];
  if (!(r0 > 0.0 && r1 > 0.0 && r2 > 0.0)) return std::nullopt;
  const double den = std::log(r1 / r0);
  if (den == 0.0) return std::nullopt;
  return std::log(r2 / r1) / den;
}

namespace {

bool try_eval(const ResidualFunction& f, const Vector& y, Vector& out) {
  try {
    out = f(y);
  } catch (const Error&) {
    return false;
  }
  return out.allFinite();
}

}  // namespace

GaussNewtonResult gauss_newton(const ResidualFunction& f, const Vector& y0,
                               const GaussNewtonOptions& options) {
  GaussNewtonResult result;
  ConvergenceReport& report = result.report;
  Vector y = y0;
  Vector r = f(y);
  if (!r.allFinite()) throw NonFiniteResidual("residual is not finite at the initial point");
  report.unknowns = static_cast<int>(y.size());
  report.equations = static_cast<int>(r.size());
  report.initial_residual = r.lpNorm<Eigen::Infinity>();

  bool hit_max_iter = true;
  for (int it = 0; it < options.max_iter; ++it) {
    if (r.lpNorm<Eigen::Infinity>() <= options.tol) {
      report.converged = true;
      report.stop_reason = "residual below tolerance";
      hit_max_iter = false;
      break;
    }
    const Matrix jac = fd_jacobian(f, y, options.parallel_jacobian);
    const Vector d = gauss_newton_step(jac, r, options.rank_rtol);

    const double base = r.norm();
    double scale = 1.0;
    bool accepted = false;
    Vector trial;
    Vector rt;
    for (int h = 0; h <= options.max_halvings; ++h) {
      trial = y + scale * d;
      if (try_eval(f, trial, rt) && rt.norm() < base) {
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) {
      report.stop_reason = "no decrease after step halving";
      hit_max_iter = false;
      break;
    }
    const double step = (trial - y).norm();
    y = trial;
    r = rt;
    report.iterations.push_back({r.lpNorm<Eigen::Infinity>(), step, scale});
    if (step <= options.min_step) {
      report.converged = r.lpNorm<Eigen::Infinity>() <= options.tol;
      report.stop_reason = "step below minimum";
      hit_max_iter = false;
      break;
    }
  }
  if (hit_max_iter && r.lpNorm<Eigen::Infinity>() <= options.tol) {
    report.converged = true;
    report.stop_reason = "residual below tolerance";
    hit_max_iter = false;
  }

  report.final_residual = r.lpNorm<Eigen::Infinity>();
  const std::vector<double> history = report.residual_history();
  report.order_estimate = estimate_order(history);
  result.solution = y;

  if (hit_max_iter) {
    throw MaxIterExceeded("Gauss-Newton did not converge in " + std::to_string(options.max_iter) +
                              " iterations (|S|_inf = " + std::to_string(report.final_residual) +
                              ")",
                          y);
  }

  const Matrix jac = fd_jacobian(f, y, options.parallel_jacobian);
  Eigen::BDCSVD<Matrix> svd(jac);
  report.singular_values = svd.singularValues();
  const double smax = report.singular_values.size() ? report.singular_values(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < report.singular_values.size(); ++i) {
    if (report.singular_values(i) > options.rank_rtol * smax) ++rank;
  }
  report.jacobian_rank = rank;
  report.smallest_singular_value =
      report.singular_values.size() ? report.singular_values(report.singular_values.size() - 1)
                                    : 0.0;
  if (rank < report.unknowns) throw RankDeficientJacobian(rank, report.unknowns);
  return result;
}

}  // namespace arcshoot
