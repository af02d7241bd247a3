#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace arcshoot::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kFindings = 2,  ///< finished, but validation or positivity reported findings
};

struct RunConfig {
  std::string problem;
  /// Comma-separated tokens ("B-,C,S"), "detect", or empty for the built-in one.
  std::string structure;
  std::vector<double> tau;
  /// "analytic", "direct", or the path of an omega.json warm start.
  std::string init = "analytic";
  int steps = 1000;
  double tol = 1e-8;
  int max_iter = 50;
  std::filesystem::path output_dir = ".";
  bool parallel_jacobian = false;

  // structure detection / direct solve
  int grid = 100;
  double penalty = 1e3;
  std::optional<double> min_arc_len;
  std::optional<double> tol_u;
  std::optional<double> tol_g;
  std::filesystem::path trajectory;  ///< detect on this CSV instead of a direct solve

  // verification
  std::filesystem::path omega;  ///< omega.json to certify
  std::filesystem::path form;   ///< {hess, gram, cons} JSON, bypassing assembly
  int intervals = 199;
};

int cmd_solve(const RunConfig& cfg, std::ostream& log);
int cmd_detect(const RunConfig& cfg, std::ostream& log);
int cmd_verify(const RunConfig& cfg, std::ostream& log);

/// Parses `solve | detect | verify` with flags and an optional --config JSON
/// file (flags win) and dispatches. Errors become exit code 1 with a message
/// on `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace arcshoot::cli
