#include "arcshoot/builtin_problems.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "arcshoot/errors.hpp"

namespace arcshoot {

ProblemDef regulator_problem() {
  ProblemDef p;
  p.name = "regulator";
  p.n = 3;
  p.q = 3;
  p.horizon = 5.0;
  p.u_min = -1.0;
  p.u_max = 1.0;
  p.f0 = [](const Vector& x) {
    return Vector{{x(1), 0.0, 0.5 * (x(0) * x(0) + x(1) * x(1))}};
  };
  p.f1 = [](const Vector&) { return Vector{{0.0, 1.0, 0.0}}; };
  p.df0 = [](const Vector& x) {
    Matrix a = Matrix::Zero(3, 3);
    a(0, 1) = 1.0;
    a(2, 0) = x(0);
    a(2, 1) = x(1);
    return a;
  };
  p.df1 = [](const Vector&) { return Matrix::Zero(3, 3).eval(); };
  p.g = [](const Vector& x) { return -x(1) - 0.2; };
  p.dg = [](const Vector&) { return Covector{{0.0, -1.0, 0.0}}; };
  p.phi = [](const Vector&, const Vector& xT) { return xT(2) + 0.5 * xT(0) * xT(0); };
  p.dphi = [](const Vector&, const Vector& xT) {
    return std::pair{Covector::Zero(3).eval(), Covector{{xT(0), 0.0, 1.0}}};
  };
  p.Phi = [](const Vector& x0, const Vector&) {
    return Vector{{x0(0), x0(1) - 1.0, x0(2)}};
  };
  p.dPhi = [](const Vector&, const Vector&) {
    return std::pair{Matrix::Identity(3, 3).eval(), Matrix::Zero(3, 3).eval()};
  };
  p.bracket = [](Bracket which, const Vector& x) {
    switch (which) {
      case Bracket::F1F0:
        return Vector{{-1.0, 0.0, -x(1)}};
      case Bracket::F1F0_F0:
        return Vector{{0.0, 0.0, x(0)}};
      case Bracket::F1F0_F1:
        break;
    }
    return Vector{{0.0, 0.0, -1.0}};
  };
  return p;
}

ProblemDef toy_bang_problem() {
  ProblemDef p;
  p.name = "toy-bang";
  p.n = 1;
  p.q = 1;
  p.horizon = 1.0;
  p.u_min = -1.0;
  p.u_max = 1.0;
  p.f0 = [](const Vector&) { return Vector::Zero(1).eval(); };
  p.f1 = [](const Vector&) { return Vector::Ones(1).eval(); };
  p.df0 = [](const Vector&) { return Matrix::Zero(1, 1).eval(); };
  p.df1 = [](const Vector&) { return Matrix::Zero(1, 1).eval(); };
  p.g = [](const Vector& x) { return -x(0) - 2.0; };
  p.dg = [](const Vector&) { return Covector::Constant(1, -1.0).eval(); };
  p.phi = [](const Vector&, const Vector& xT) { return xT(0); };
  p.dphi = [](const Vector&, const Vector&) {
    return std::pair{Covector::Zero(1).eval(), Covector::Ones(1).eval()};
  };
  p.Phi = [](const Vector& x0, const Vector&) { return x0; };
  p.dPhi = [](const Vector&, const Vector&) {
    return std::pair{Matrix::Identity(1, 1).eval(), Matrix::Zero(1, 1).eval()};
  };
  return p;
}

namespace regulator {
namespace {

// Closed-form pieces. On C the state sits on x2 = -0.2 and x1 decreases
// linearly from x1(tau1) = 0.48; on S, x1 = -x2 = p1 decays exponentially.
constexpr double c_level = 0.2;
constexpr double x1_entry = tau1 - 0.5 * tau1 * tau1;  // 0.48
constexpr double x1_offset = x1_entry + c_level * tau1;  // 0.72

double x3_bang(double t) {
  const double t2 = t * t;
  return 0.5 * (t - t2 + 2.0 * t2 * t / 3.0 - t2 * t2 / 4.0 + t2 * t2 * t / 20.0);
}

double x1_constrained(double t) { return x1_offset - c_level * t; }

double x3_constrained(double t) {
  const double cube = [](double v) { return v * v * v; }(x1_constrained(t));
  return x3_bang(tau1) + 0.5 * (-(cube - x1_entry * x1_entry * x1_entry) / (3.0 * c_level) +
                                c_level * c_level * (t - tau1));
}

// p1 on C: p1' = -x1, p1(tau2) = x1(tau2) = 0.2.
double p1_constrained(double t) {
  return c_level + (t * t - tau2 * tau2) * (c_level / 2.0) - x1_offset * (t - tau2);
}

// Antiderivative of p1 - 0.2 on C.
double p2_constrained_primitive(double t) {
  return c_level * t * t * t / 6.0 - c_level / 2.0 * tau2 * tau2 * t -
         0.5 * x1_offset * (t - tau2) * (t - tau2);
}

double p2_constrained(double t) {
  return p2_constrained_primitive(tau2) - p2_constrained_primitive(t);
}

// p1 on B-: p1' = -x1 = -(t - t^2/2), continuous at tau1.
double p1_bang_constant() {
  return p1_constrained(tau1) + tau1 * tau1 / 2.0 - tau1 * tau1 * tau1 / 6.0;
}

double p1_bang(double t) { return p1_bang_constant() - t * t / 2.0 + t * t * t / 6.0; }

// p2' = -(p1 + x2), p2(tau1) = 0.
double p2_bang_primitive(double t) {
  const double k = p1_bang_constant() + 1.0;
  return k * t - t * t / 2.0 - t * t * t / 6.0 + t * t * t * t / 24.0;
}

double p2_bang(double t) { return p2_bang_primitive(tau1) - p2_bang_primitive(t); }

}  // namespace

int arc_at(double t) { return t < tau1 ? 0 : (t < tau2 ? 1 : 2); }

Vector state(double t) {
  switch (arc_at(t)) {
    case 0:
      return Vector{{t - 0.5 * t * t, 1.0 - t, x3_bang(t)}};
    case 1:
      return Vector{{x1_constrained(t), -c_level, x3_constrained(t)}};
    default: {
      const double e = std::exp(tau2 - t);
      return Vector{{c_level * e, -c_level * e,
                     x3_constrained(tau2) + 0.5 * c_level * c_level * (1.0 - e * e)}};
    }
  }
}

Covector costate(int arc, double t) {
  switch (arc) {
    case 0:
      return Covector{{p1_bang(t), p2_bang(t), 1.0}};
    case 1:
      return Covector{{p1_constrained(t), p2_constrained(t), 1.0}};
    case 2:
      return Covector{{c_level * std::exp(tau2 - t), 0.0, 1.0}};
    default:
      throw ConfigurationError("regulator::costate: arc index out of range");
  }
}

double control(double t) {
  switch (arc_at(t)) {
    case 0:
      return -1.0;
    case 1:
      return 0.0;
    default:
      return state(t)(0);
  }
}

double gamma() { return p2_constrained(tau1); }

double cost() {
  const Vector xT = state(5.0);
  return xT(2) + 0.5 * xT(0) * xT(0);
}

ArcStructure structure() {
  return {{ArcKind::BMinus, ArcKind::Constrained, ArcKind::Singular}, {tau1, tau2}};
}

ShootingVector omega() {
  ShootingVector w;
  w.x0 = {state(0.0), state(tau1), state(tau2)};
  w.tau = {tau1, tau2};
  w.p0 = {costate(0, 0.0), costate(1, tau1), costate(2, tau2)};
  w.psi = -w.p0.front();
  w.gamma = Vector::Constant(1, gamma());
  return w;
}

}  // namespace regulator

namespace {

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, BuiltinProblem, std::less<>>& registry() {
  static std::map<std::string, BuiltinProblem, std::less<>> entries = [] {
    std::map<std::string, BuiltinProblem, std::less<>> m;
    m["regulator"] = {regulator_problem(), regulator::structure(), &regulator::omega};
    m["toy-bang"] = {toy_bang_problem(), ArcStructure{{ArcKind::BMinus}, {}}, [] {
                       ShootingVector w;
                       w.x0 = {Vector::Zero(1)};
                       w.p0 = {Covector::Ones(1)};
                       w.psi = Covector::Constant(1, -1.0);
                       w.gamma = Vector::Zero(0);
                       return w;
                     }};
    return m;
  }();
  return entries;
}

}  // namespace

const BuiltinProblem& find_problem(std::string_view name) {
  std::lock_guard lock(registry_mutex());
  auto& m = registry();
  auto it = m.find(name);
  if (it == m.end()) {
    std::string known;
    for (const auto& [key, _] : m) known += (known.empty() ? "" : ", ") + key;
    throw ConfigurationError("unknown problem '" + std::string(name) + "' (known: " + known + ")");
  }
  return it->second;
}

void register_problem(BuiltinProblem entry) {
  validate_problem(entry.problem);
  std::lock_guard lock(registry_mutex());
  std::string key = entry.problem.name;
  registry()[key] = std::move(entry);
}

std::vector<std::string> problem_names() {
  std::lock_guard lock(registry_mutex());
  std::vector<std::string> names;
  for (const auto& [key, _] : registry()) names.push_back(key);
  return names;
}

}  // namespace arcshoot
