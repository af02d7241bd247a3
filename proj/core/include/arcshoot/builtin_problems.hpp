#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "arcshoot/arc_structure.hpp"
#include "arcshoot/problem.hpp"
#include "arcshoot/shooting.hpp"

namespace arcshoot {

/// A named problem, optionally with a known arc structure and a closed-form
/// extremal that can seed the shooting method.
struct BuiltinProblem {
  ProblemDef problem;
  std::optional<ArcStructure> structure;
  /// Shooting unknowns of the closed-form extremal; empty when unknown.
  std::function<ShootingVector()> analytic;
};

/// Registry lookup; throws ConfigurationError for unknown names.
const BuiltinProblem& find_problem(std::string_view name);
/// Adds or replaces an entry. Thread-safe.
void register_problem(BuiltinProblem entry);
std::vector<std::string> problem_names();

/// min x3(5) + x1(5)^2 / 2 subject to x1' = x2, x2' = u, x3' = (x1^2 + x2^2) / 2,
/// x(0) = (0, 1, 0), |u| <= 1, x2 >= -0.2. Analytic brackets are installed.
ProblemDef regulator_problem();

/// x' = u on [0, 1], |u| <= 1, x(0) = 0, min x(1). The inactive constraint
/// g = -x - 2 is attached so that C arcs can still be formed in tests.
ProblemDef toy_bang_problem();

/// Closed-form extremal of the regulator: B- on [0, 1.2], C on [1.2, 2.6],
/// S on [2.6, 5].
namespace regulator {

inline constexpr double tau1 = 1.2;
inline constexpr double tau2 = 2.6;

/// Arc containing t (0-based); switching times belong to the later arc.
int arc_at(double t);
Vector state(double t);
/// Costate of the given arc at original time t. On the constrained arc this
/// is the transformed-problem costate, whose p2 decays from gamma() to 0.
Covector costate(int arc, double t);
double control(double t);
/// Entry multiplier of the constrained arc.
double gamma();
double cost();

ArcStructure structure();
ShootingVector omega();

}  // namespace regulator

}  // namespace arcshoot
