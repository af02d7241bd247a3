#pragma once

#include <Eigen/Dense>

namespace arcshoot {

/// State vectors and vector fields live in columns.
using Vector = Eigen::VectorXd;
/// Costates and gradients of scalar maps are row vectors (p in R^{1 x n}).
using Covector = Eigen::RowVectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace arcshoot
