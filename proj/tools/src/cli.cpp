#include "arcshoot_cli/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <functional>
#include <ostream>

#include "arcshoot/builtin_problems.hpp"
#include "arcshoot/direct_init.hpp"
#include "arcshoot/errors.hpp"
#include "arcshoot/second_order.hpp"
#include "arcshoot/shooting.hpp"
#include "arcshoot/validation.hpp"
#include "arcshoot_cli/io.hpp"

namespace arcshoot::cli {

using io::json;

namespace {

DetectionTolerances detection_tolerances(const RunConfig& cfg) {
  DetectionTolerances t;
  t.tol_u = cfg.tol_u;
  t.tol_g = cfg.tol_g;
  t.min_arc_len = cfg.min_arc_len;
  return t;
}

DirectSolution run_direct(const ProblemDef& p, const RunConfig& cfg, std::ostream& log) {
  DirectSolveConfig dc;
  dc.grid_size = cfg.grid;
  dc.penalty_weight = cfg.penalty;
  DirectSolution d = direct_solve(p, dc);
  log << "direct solve: " << d.iterations << " iterations, cost " << io::fmt9(d.cost)
      << " (re-integrated " << io::fmt9(d.control_cost) << ")"
      << (d.stalled ? ", stalled" : "") << '\n';
  return d;
}

template <class T>
T interpolate(const std::vector<double>& t, const std::vector<T>& v, double at) {
  auto it = std::upper_bound(t.begin(), t.end(), at);
  if (it == t.begin()) return v.front();
  if (it == t.end()) return v.back();
  const std::size_t i = static_cast<std::size_t>(it - t.begin());
  const double a = (at - t[i - 1]) / (t[i] - t[i - 1]);
  return ((1.0 - a) * v[i - 1] + a * v[i]).eval();
}

// Arc entry states and adjoint values read off the direct solution. gamma
// starts at zero; Psi solves the initial transversality in least squares.
ShootingVector omega_from_direct(const ProblemDef& p, const ArcStructure& s,
                                 const DirectSolution& d) {
  ShootingVector w;
  w.tau = s.tau;
  for (int k = 0; k < s.arcs(); ++k) {
    const double t = k == 0 ? 0.0 : s.tau[k - 1];
    w.x0.push_back(interpolate(d.t, d.x, t));
    w.p0.push_back(interpolate(d.t, d.lambda, t));
  }
  w.psi = Covector::Zero(p.q);
  if (p.q > 0) {
    auto [d0, d1] = p.dphi(w.x0.front(), d.x.back());
    auto [j0, j1] = p.dPhi(w.x0.front(), d.x.back());
    const Vector rhs = -(w.p0.front() + d0).transpose();
    w.psi = j0.transpose().bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(rhs).transpose();
  }
  w.gamma = Vector::Zero(static_cast<int>(index_sets(s).constrained.size()));
  return w;
}

void require_positive_steps(const RunConfig& cfg, const ArcStructure& s) {
  if (cfg.steps < s.arcs()) {
    throw ConfigurationError("steps (" + std::to_string(cfg.steps) +
                             ") must be at least the number of arcs");
  }
}

}  // namespace

int cmd_solve(const RunConfig& cfg, std::ostream& log) {
  const BuiltinProblem& entry = find_problem(cfg.problem);
  const ProblemDef& p = entry.problem;

  std::optional<DirectSolution> direct;
  std::optional<io::WarmStart> warm;
  const bool analytic = cfg.init == "analytic";
  if (!analytic && cfg.init != "direct") warm = io::warm_start_from_json(io::read_json(cfg.init), p);

  ArcStructure s;
  if (cfg.structure == "detect") {
    direct = run_direct(p, cfg, log);
    s = detect_structure(p, direct->t, direct->u, direct->x, detection_tolerances(cfg));
    log << "detected structure " << format_structure(s) << '\n';
  } else if (!cfg.structure.empty()) {
    s = parse_structure(cfg.structure, p.horizon);
  } else if (warm) {
    s = warm->structure;
  } else if (entry.structure) {
    s = *entry.structure;
  } else {
    throw ConfigurationError("problem '" + cfg.problem +
                             "' has no built-in structure; pass --structure");
  }
  if (!cfg.tau.empty()) s.tau = cfg.tau;
  validate_structure(p, s);
  require_positive_steps(cfg, s);

  ShootingVector omega0;
  if (analytic) {
    if (!entry.analytic || !entry.structure) {
      throw ConfigurationError("problem '" + cfg.problem + "' has no analytic initial guess");
    }
    if (entry.structure->kinds != s.kinds) {
      throw ConfigurationError("the analytic guess is only available for the structure " +
                               format_structure(*entry.structure));
    }
    omega0 = entry.analytic();
  } else if (warm) {
    if (warm->structure.kinds != s.kinds) {
      throw ConfigurationError("warm start was computed for the structure " +
                               format_structure(warm->structure));
    }
    omega0 = warm->omega;
  } else {
    if (!direct) direct = run_direct(p, cfg, log);
    omega0 = omega_from_direct(p, s, *direct);
  }

  ShootingOptions options;
  options.steps_per_arc = steps_per_arc_for(cfg.steps, s.arcs());
  options.newton.tol = cfg.tol;
  options.newton.max_iter = cfg.max_iter;
  options.newton.parallel_jacobian = cfg.parallel_jacobian;

  const ShootingSolution sol = solve_shooting(p, s, omega0, options);
  const ValidationReport validation = validate_solution(p, sol.structure, sol.trajectory);

  const int total_steps = options.steps_per_arc * s.arcs();
  io::write_trajectory_csv(cfg.output_dir / "trajectory.csv", p, sol.trajectory);
  io::write_json(cfg.output_dir / "omega.json",
                 io::omega_json(p, sol.structure, sol.omega, total_steps));
  json tau = json::array();
  for (double t : sol.structure.tau) tau.push_back(io::num9(t));
  json report = io::convergence_json(sol.report);
  report["problem"] = p.name;
  report["structure"] = io::structure_json(sol.structure);
  report["tau"] = tau;
  report["cost"] = io::num9(sol.cost);
  report["steps"] = total_steps;
  report["validation"] = io::validation_json(validation);
  io::write_json(cfg.output_dir / "report.json", report);

  log << "structure " << format_structure(sol.structure) << ", |S|_inf "
      << io::fmt9(sol.report.final_residual) << " after " << sol.report.iterations.size()
      << " iterations, cost " << io::fmt9(sol.cost) << '\n';
  if (!sol.report.converged) {
    log << "not converged: " << sol.report.stop_reason << '\n';
    return kFailure;
  }
  for (const auto& f : validation.findings) log << "finding: " << f << '\n';
  return validation.pass() ? kOk : kFindings;
}

int cmd_detect(const RunConfig& cfg, std::ostream& log) {
  const BuiltinProblem& entry = find_problem(cfg.problem);
  const ProblemDef& p = entry.problem;

  io::Samples samples;
  json source;
  if (!cfg.trajectory.empty()) {
    samples = io::read_samples_csv(cfg.trajectory, p.n);
    source = {{"kind", "trajectory"}, {"path", cfg.trajectory.string()}};
  } else {
    const DirectSolution d = run_direct(p, cfg, log);
    samples = {d.t, d.u, d.x};
    io::write_samples_csv(cfg.output_dir / "direct.csv", samples);
    source = {{"kind", "direct"},
              {"grid", cfg.grid},
              {"penalty", io::num9(cfg.penalty)},
              {"cost", io::num9(d.cost)},
              {"control_cost", io::num9(d.control_cost)},
              {"iterations", d.iterations},
              {"stalled", d.stalled}};
  }

  const DetectionTolerances tols = detection_tolerances(cfg);
  const ResolvedTolerances resolved = resolve_tolerances(p, samples.x, tols);
  const std::vector<char> raw = classify_points(p, samples.u, samples.x, resolved);
  const ArcStructure s = detect_structure(p, samples.t, samples.u, samples.x, tols);

  json out = io::structure_json(s);
  out["structure"] = format_structure(s);
  out["classification"] = std::string(raw.begin(), raw.end());
  out["tolerances"] = {{"tol_u", io::num9(resolved.tol_u)},
                       {"tol_g", io::num9(resolved.tol_g)},
                       {"min_arc_len", io::num9(resolved.min_arc_len)}};
  out["source"] = source;
  io::write_json(cfg.output_dir / "structure.json", out);
  log << "detected structure " << format_structure(s) << '\n';
  return kOk;
}

int cmd_verify(const RunConfig& cfg, std::ostream& log) {
  SecondOrderOptions options;
  options.intervals = cfg.intervals;

  PositivityReport r;
  if (!cfg.form.empty()) {
    const json j = io::read_json(cfg.form);
    if (!j.contains("hess") || !j.contains("gram")) {
      throw ConfigurationError(cfg.form.string() + ": expected keys hess and gram");
    }
    const Matrix hess = io::matrix_from_json(j.at("hess"));
    const Matrix gram = io::matrix_from_json(j.at("gram"));
    Matrix cons = j.contains("cons") ? io::matrix_from_json(j.at("cons")) : Matrix();
    if (cons.rows() == 0) cons.resize(0, hess.cols());
    r = check_positivity(hess, gram, cons, options);
  } else {
    if (cfg.omega.empty()) throw ConfigurationError("verify needs --omega or --form");
    const BuiltinProblem& entry = find_problem(cfg.problem);
    const io::WarmStart ws = io::warm_start_from_json(io::read_json(cfg.omega), entry.problem);
    const SecondOrderModel model = build_model(entry.problem, ws.structure, ws.omega, options);
    r = check_positivity(assemble_omega(model), options);
  }
  io::write_json(cfg.output_dir / "positivity.json", io::positivity_json(r));
  log << "c_est " << io::fmt9(r.c_est) << " on a " << r.nullspace_dim
      << "-dimensional critical subspace: " << (r.pass ? "pass" : "fail") << '\n';
  if (!r.warning.empty()) log << "warning: " << r.warning << '\n';
  return r.pass ? kOk : kFindings;
}

namespace {

// Fills fields from a JSON config for every option the user did not pass.
void apply_config(const json& j, RunConfig& cfg, const CLI::App& sub) {
  auto given = [&](const char* flag) { return sub.count(flag) > 0; };
  auto take = [&](const char* key, const char* flag, auto& field) {
    if (j.contains(key) && !given(flag)) j.at(key).get_to(field);
  };
  auto take_opt = [&](const char* key, const char* flag, std::optional<double>& field) {
    if (j.contains(key) && !given(flag)) field = j.at(key).get<double>();
  };
  auto take_path = [&](const char* key, const char* flag, std::filesystem::path& field) {
    if (j.contains(key) && !given(flag)) field = j.at(key).get<std::string>();
  };
  try {
    take("problem", "--problem", cfg.problem);
    if (j.contains("structure") && !given("--structure")) {
      const json& s = j.at("structure");
      if (s.is_string()) {
        cfg.structure = s.get<std::string>();
      } else {
        std::string text;
        for (const auto& k : s.at("kinds")) text += (text.empty() ? "" : ",") + k.get<std::string>();
        cfg.structure = text;
        if (s.contains("tau") && !given("--tau")) cfg.tau = s.at("tau").get<std::vector<double>>();
      }
    }
    take("tau", "--tau", cfg.tau);
    take("init", "--init", cfg.init);
    take("steps", "--steps", cfg.steps);
    take("tol", "--tol", cfg.tol);
    take("max_iter", "--max-iter", cfg.max_iter);
    take_path("output_dir", "--out", cfg.output_dir);
    take("parallel_jacobian", "--parallel-jacobian", cfg.parallel_jacobian);
    take("grid", "--grid", cfg.grid);
    take("penalty", "--penalty", cfg.penalty);
    take_opt("min_arc_len", "--min-arc-len", cfg.min_arc_len);
    take_opt("tol_u", "--tol-u", cfg.tol_u);
    take_opt("tol_g", "--tol-g", cfg.tol_g);
    take_path("trajectory", "--trajectory", cfg.trajectory);
    take_path("omega", "--omega", cfg.omega);
    take_path("form", "--form", cfg.form);
    take("intervals", "--intervals", cfg.intervals);
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("config file: ") + e.what());
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Indirect shooting for control-affine problems with a state constraint"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string config_path;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file; flags take precedence");
    sub->add_option("--problem", cfg.problem, "built-in problem name");
    sub->add_option("--out", cfg.output_dir, "output directory");
  };
  auto detection = [&](CLI::App* sub) {
    sub->add_option("--grid", cfg.grid, "direct-solve control intervals");
    sub->add_option("--penalty", cfg.penalty, "state-constraint penalty weight");
    sub->add_option("--min-arc-len", cfg.min_arc_len, "shortest credible arc (default 0.02 T)");
    sub->add_option("--tol-u", cfg.tol_u, "bound-detection tolerance");
    sub->add_option("--tol-g", cfg.tol_g, "contact-detection tolerance");
  };

  CLI::App* solve = app.add_subcommand("solve", "solve the shooting equations");
  common(solve);
  detection(solve);
  solve->add_option("--structure", cfg.structure, "arc kinds, e.g. B-,C,S, or 'detect'");
  solve->add_option("--tau", cfg.tau, "switching-time guesses")->delimiter(',');
  solve->add_option("--init", cfg.init, "analytic | direct | path to omega.json");
  solve->add_option("--steps", cfg.steps, "total RK4 steps over all arcs");
  solve->add_option("--tol", cfg.tol, "Gauss-Newton tolerance on |S|_inf");
  solve->add_option("--max-iter", cfg.max_iter, "Gauss-Newton iteration limit");
  solve->add_flag("--parallel-jacobian", cfg.parallel_jacobian,
                  "evaluate Jacobian columns on several threads");

  CLI::App* detect = app.add_subcommand("detect", "estimate the arc structure");
  common(detect);
  detection(detect);
  detect->add_option("--trajectory", cfg.trajectory, "CSV t,u,x1..xn to classify");

  CLI::App* verify = app.add_subcommand("verify", "second-order positivity check");
  common(verify);
  verify->add_option("--omega", cfg.omega, "omega.json written by solve");
  verify->add_option("--form", cfg.form, "JSON with hess, gram and optional cons matrices");
  verify->add_option("--intervals", cfg.intervals, "intervals of the control grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kFailure;
  }

  CLI::App* active = solve->parsed() ? solve : (detect->parsed() ? detect : verify);
  try {
    if (!config_path.empty()) apply_config(io::read_json(config_path), cfg, *active);
    if (cfg.problem.empty() && cfg.form.empty()) throw ConfigurationError("--problem is required");
    if (active == solve) return cmd_solve(cfg, out);
    if (active == detect) return cmd_detect(cfg, out);
    return cmd_verify(cfg, out);
  } catch (const StructureDetectionError& e) {
    const auto& raw = e.raw_classification();
    err << "error: " << e.what() << "\nclassification: " << std::string(raw.begin(), raw.end())
        << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return kFailure;
}

}  // namespace arcshoot::cli
