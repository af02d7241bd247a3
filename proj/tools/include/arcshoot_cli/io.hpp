#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "arcshoot/arc_structure.hpp"
#include "arcshoot/gauss_newton.hpp"
#include "arcshoot/problem.hpp"
#include "arcshoot/second_order.hpp"
#include "arcshoot/shooting.hpp"
#include "arcshoot/tp_dynamics.hpp"
#include "arcshoot/validation.hpp"

namespace arcshoot::io {

using nlohmann::json;

/// Nine significant digits, "%.9g".
std::string fmt9(double v);
/// JSON number rounded to nine significant digits; null when not finite.
json num9(double v);

/// Sampled trajectory in the `t,u,x1,...,xn` layout.
struct Samples {
  std::vector<double> t;
  std::vector<double> u;
  std::vector<Vector> x;
};

void write_samples_csv(const std::filesystem::path& path, const Samples& s);
/// Throws ConfigurationError on a malformed file, a header that does not
/// match n, or an empty table.
Samples read_samples_csv(const std::filesystem::path& path, int n);

/// `arc,k,s,t,u,x1..xn,p1..pn`: arc is the kind token, k the 1-based arc
/// number, t the original time.
void write_trajectory_csv(const std::filesystem::path& path, const ProblemDef& p,
                          const TPTrajectory& traj);

json structure_json(const ArcStructure& s);
ArcStructure structure_from_json(const json& j, double horizon);

/// {structure: {kinds, tau}, omega: [...], meta: {N, n, q, steps, nC, nS}}
json omega_json(const ProblemDef& p, const ArcStructure& s, const ShootingVector& w, int steps);
struct WarmStart {
  ArcStructure structure;
  ShootingVector omega;
  int steps = 0;
};
/// Validates the meta header against the problem.
WarmStart warm_start_from_json(const json& j, const ProblemDef& p);

json convergence_json(const ConvergenceReport& r);
json validation_json(const ValidationReport& r);
json positivity_json(const PositivityReport& r);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);

Matrix matrix_from_json(const json& j);

}  // namespace arcshoot::io
