#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "arcshoot/problem.hpp"
#include "arcshoot/types.hpp"

namespace arcshoot {

enum class ArcKind { BMinus, BPlus, Constrained, Singular };

/// Token used on the command line and in files: "B-", "B+", "C", "S".
std::string_view to_token(ArcKind kind);
/// Inverse of to_token; throws ConfigurationError on unknown tokens.
ArcKind parse_arc_kind(std::string_view token);

/// Ordered arc kinds on [0, T] together with guesses for the N-1 interior
/// switching times.
struct ArcStructure {
  std::vector<ArcKind> kinds;
  std::vector<double> tau;

  int arcs() const { return static_cast<int>(kinds.size()); }
};

/// Parses "B-,C,S". Switching-time guesses default to a uniform partition of
/// [0, horizon].
ArcStructure parse_structure(std::string_view text, double horizon);
std::string format_structure(const ArcStructure& s);

/// Throws ConfigurationError unless: N >= 1, tau strictly increasing inside
/// (0, T), adjacent kinds differ, and bang arcs only reference present bounds.
void validate_structure(const ProblemDef& p, const ArcStructure& s);

/// Partition of the arc indices by kind. Indices are 0-based.
struct IndexSets {
  std::vector<int> singular;
  std::vector<int> constrained;
  std::vector<int> bang_minus;
  std::vector<int> bang_plus;
};

IndexSets index_sets(const ArcStructure& s);

struct DetectionTolerances {
  /// |u - bound| at or below this counts as a bang point.
  std::optional<double> tol_u;
  /// g(x) >= -tol_g counts as a contact point.
  std::optional<double> tol_g;
  /// Runs shorter than this (time units) are merged into a neighbour.
  std::optional<double> min_arc_len;
};

/// Defaults: tol_u = 1e-3 (u_max - u_min) (1e-3 when a bound is absent),
/// tol_g = 1e-4 (1 + max |g| over the grid), min_arc_len = 0.02 T.
struct ResolvedTolerances {
  double tol_u;
  double tol_g;
  double min_arc_len;
};
ResolvedTolerances resolve_tolerances(const ProblemDef& p, std::span<const Vector> x,
                                      const DetectionTolerances& tols);

/// Per-point classification: '-' lower bound, '+' upper bound, 'C' contact,
/// 'S' interior.
std::vector<char> classify_points(const ProblemDef& p, std::span<const double> u,
                                  std::span<const Vector> x, const ResolvedTolerances& tols);

/// Recovers the arc sequence from a sampled trajectory (t, u, x) covering
/// [0, T]. Throws StructureDetectionError when the result is not a valid
/// structure.
ArcStructure detect_structure(const ProblemDef& p, std::span<const double> t,
                              std::span<const double> u, std::span<const Vector> x,
                              const DetectionTolerances& tols = {});

}  // namespace arcshoot
