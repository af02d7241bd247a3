#include "arcshoot/arc_structure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "arcshoot/errors.hpp"

namespace arcshoot {

std::string_view to_token(ArcKind kind) {
  switch (kind) {
    case ArcKind::BMinus:
      return "B-";
    case ArcKind::BPlus:
      return "B+";
    case ArcKind::Constrained:
      return "C";
    case ArcKind::Singular:
      return "S";
  }
  return "?";
}

ArcKind parse_arc_kind(std::string_view token) {
  if (token == "B-") return ArcKind::BMinus;
  if (token == "B+") return ArcKind::BPlus;
  if (token == "C") return ArcKind::Constrained;
  if (token == "S") return ArcKind::Singular;
  throw ConfigurationError("unknown arc kind '" + std::string(token) +
                           "' (expected B-, B+, C or S)");
}

ArcStructure parse_structure(std::string_view text, double horizon) {
  ArcStructure s;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view token = text.substr(start, end - start);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    s.kinds.push_back(parse_arc_kind(token));
    start = end + 1;
  }
  const int n = s.arcs();
  for (int k = 1; k < n; ++k) s.tau.push_back(horizon * k / n);
  return s;
}

std::string format_structure(const ArcStructure& s) {
  std::string out;
  for (std::size_t i = 0; i < s.kinds.size(); ++i) {
    if (i) out += ',';
    out += to_token(s.kinds[i]);
  }
  return out;
}

void validate_structure(const ProblemDef& p, const ArcStructure& s) {
  const int n = s.arcs();
  if (n < 1) throw ConfigurationError("arc structure must contain at least one arc");
  if (static_cast<int>(s.tau.size()) != n - 1) {
    throw ConfigurationError("arc structure with " + std::to_string(n) + " arcs needs " +
                             std::to_string(n - 1) + " switching times, got " +
                             std::to_string(s.tau.size()));
  }
  double previous = 0.0;
  for (int k = 0; k + 1 < n; ++k) {
    const double t = s.tau[k];
    if (!(t > previous) || !(t < p.horizon)) {
      std::ostringstream os;
      os << "switching times must satisfy 0 < tau_1 < ... < tau_{N-1} < T; tau_" << k + 1
         << " = " << t;
      throw ConfigurationError(os.str());
    }
    previous = t;
  }
  for (int k = 0; k < n; ++k) {
    if (k + 1 < n && s.kinds[k] == s.kinds[k + 1]) {
      throw ConfigurationError("adjacent arcs " + std::to_string(k + 1) + " and " +
                               std::to_string(k + 2) + " have the same kind " +
                               std::string(to_token(s.kinds[k])));
    }
    if (s.kinds[k] == ArcKind::BMinus && !p.u_min) {
      throw ConfigurationError("B- arc requested but the problem has no lower control bound");
    }
    if (s.kinds[k] == ArcKind::BPlus && !p.u_max) {
      throw ConfigurationError("B+ arc requested but the problem has no upper control bound");
    }
  }
}

IndexSets index_sets(const ArcStructure& s) {
  IndexSets sets;
  for (int k = 0; k < s.arcs(); ++k) {
    switch (s.kinds[k]) {
      case ArcKind::Singular:
        sets.singular.push_back(k);
        break;
      case ArcKind::Constrained:
        sets.constrained.push_back(k);
        break;
      case ArcKind::BMinus:
        sets.bang_minus.push_back(k);
        break;
      case ArcKind::BPlus:
        sets.bang_plus.push_back(k);
        break;
    }
  }
  return sets;
}

ResolvedTolerances resolve_tolerances(const ProblemDef& p, std::span<const Vector> x,
                                      const DetectionTolerances& tols) {
  ResolvedTolerances r{};
  if (tols.tol_u) {
    r.tol_u = *tols.tol_u;
  } else if (p.u_min && p.u_max) {
    r.tol_u = 1e-3 * (*p.u_max - *p.u_min);
  } else {
    r.tol_u = 1e-3;
  }
  if (tols.tol_g) {
    r.tol_g = *tols.tol_g;
  } else {
    double gmax = 0.0;
    for (const Vector& xi : x) gmax = std::max(gmax, std::abs(p.g(xi)));
    r.tol_g = 1e-4 * (1.0 + gmax);
  }
  r.min_arc_len = tols.min_arc_len.value_or(0.02 * p.horizon);
  return r;
}

std::vector<char> classify_points(const ProblemDef& p, std::span<const double> u,
                                  std::span<const Vector> x, const ResolvedTolerances& tols) {
  std::vector<char> raw(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    // Bound tests take priority over the contact test.
    if (p.u_min && std::abs(u[i] - *p.u_min) <= tols.tol_u) {
      raw[i] = '-';
    } else if (p.u_max && std::abs(u[i] - *p.u_max) <= tols.tol_u) {
      raw[i] = '+';
    } else if (p.g(x[i]) >= -tols.tol_g) {
      raw[i] = 'C';
    } else {
      raw[i] = 'S';
    }
  }
  return raw;
}

namespace {

struct Run {
  char label;
  double begin;
  double end;

  double length() const { return end - begin; }
};

ArcKind kind_of(char label) {
  switch (label) {
    case '-':
      return ArcKind::BMinus;
    case '+':
      return ArcKind::BPlus;
    case 'C':
      return ArcKind::Constrained;
    default:
      return ArcKind::Singular;
  }
}

void coalesce(std::vector<Run>& runs) {
  std::vector<Run> out;
  for (const Run& r : runs) {
    if (!out.empty() && out.back().label == r.label) {
      out.back().end = r.end;
    } else {
      out.push_back(r);
    }
  }
  runs = std::move(out);
}

}  // namespace

ArcStructure detect_structure(const ProblemDef& p, std::span<const double> t,
                              std::span<const double> u, std::span<const Vector> x,
                              const DetectionTolerances& tols) {
  if (t.empty()) throw ConfigurationError("detect_structure: empty trajectory grid");
  if (u.size() != t.size() || x.size() != t.size()) {
    throw ConfigurationError("detect_structure: samples are not aligned with the grid");
  }
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1])) {
      throw ConfigurationError("detect_structure: grid must be strictly increasing");
    }
  }

  const ResolvedTolerances resolved = resolve_tolerances(p, x, tols);
  std::vector<char> raw = classify_points(p, u, x, resolved);

  // Runs extend to the midpoints between differently labelled samples; the
  // first and last run are pinned to 0 and T.
  std::vector<Run> runs;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (runs.empty() || runs.back().label != raw[i]) {
      const double begin = runs.empty() ? 0.0 : 0.5 * (t[i - 1] + t[i]);
      if (!runs.empty()) runs.back().end = begin;
      runs.push_back({raw[i], begin, p.horizon});
    }
  }

  while (runs.size() > 1) {
    auto shortest = std::min_element(runs.begin(), runs.end(), [](const Run& a, const Run& b) {
      return a.length() < b.length();
    });
    if (shortest->length() >= resolved.min_arc_len) break;
    const auto idx = static_cast<std::size_t>(shortest - runs.begin());
    std::size_t target;
    if (idx == 0) {
      target = 1;
    } else if (idx + 1 == runs.size()) {
      target = idx - 1;
    } else {
      target = runs[idx - 1].length() >= runs[idx + 1].length() ? idx - 1 : idx + 1;
    }
    runs[idx].label = runs[target].label;
    coalesce(runs);
  }

  ArcStructure s;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    s.kinds.push_back(kind_of(runs[i].label));
    if (i > 0) s.tau.push_back(runs[i].begin);
  }
  try {
    validate_structure(p, s);
  } catch (const ConfigurationError& e) {
    throw StructureDetectionError(std::string("detected structure is invalid: ") + e.what(),
                                  std::move(raw));
  }
  return s;
}

}  // namespace arcshoot
