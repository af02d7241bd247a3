#include "arcshoot_cli/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "arcshoot/errors.hpp"

namespace arcshoot::io {

std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

json num9(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::strtod(fmt9(v).c_str(), nullptr);
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigurationError("cannot write " + path.string());
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    cells.push_back(cell);
  }
  return cells;
}

double parse_number(const std::string& cell, const std::filesystem::path& path, int line) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end == cell.c_str() || *end != '\0') {
    throw ConfigurationError(path.string() + ":" + std::to_string(line) + ": not a number: '" +
                             cell + "'");
  }
  return v;
}

}  // namespace

void write_samples_csv(const std::filesystem::path& path, const Samples& s) {
  std::ofstream out = open_out(path);
  const int n = s.x.empty() ? 0 : static_cast<int>(s.x.front().size());
  out << "t,u";
  for (int i = 1; i <= n; ++i) out << ",x" << i;
  out << '\n';
  for (std::size_t r = 0; r < s.t.size(); ++r) {
    out << fmt9(s.t[r]) << ',' << fmt9(s.u[r]);
    for (int i = 0; i < n; ++i) out << ',' << fmt9(s.x[r](i));
    out << '\n';
  }
}

Samples read_samples_csv(const std::filesystem::path& path, int n) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigurationError(path.string() + ": empty file");
  const auto header = split(line, ',');
  if (static_cast<int>(header.size()) != n + 2 || header[0] != "t" || header[1] != "u") {
    throw ConfigurationError(path.string() + ": expected header t,u,x1..x" + std::to_string(n));
  }
  Samples s;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line, ',');
    if (static_cast<int>(cells.size()) != n + 2) {
      throw ConfigurationError(path.string() + ":" + std::to_string(lineno) +
                               ": wrong number of columns");
    }
    s.t.push_back(parse_number(cells[0], path, lineno));
    s.u.push_back(parse_number(cells[1], path, lineno));
    Vector x(n);
    for (int i = 0; i < n; ++i) x(i) = parse_number(cells[2 + i], path, lineno);
    s.x.push_back(std::move(x));
  }
  if (s.t.empty()) throw ConfigurationError(path.string() + ": trajectory has no rows");
  return s;
}

void write_trajectory_csv(const std::filesystem::path& path, const ProblemDef& p,
                          const TPTrajectory& traj) {
  std::ofstream out = open_out(path);
  out << "arc,k,s,t,u";
  for (int i = 1; i <= p.n; ++i) out << ",x" << i;
  for (int i = 1; i <= p.n; ++i) out << ",p" << i;
  out << '\n';
  for (const ArcGrid& arc : traj.arcs) {
    for (int i = 0; i <= arc.steps(); ++i) {
      out << to_token(arc.kind) << ',' << arc.index + 1 << ',' << fmt9(arc.s[i]) << ','
          << fmt9(arc.time(i)) << ',' << fmt9(arc.w[i]);
      for (int c = 0; c < p.n; ++c) out << ',' << fmt9(arc.x[i](c));
      for (int c = 0; c < p.n; ++c) out << ',' << fmt9(arc.p[i](c));
      out << '\n';
    }
  }
}

json structure_json(const ArcStructure& s) {
  json kinds = json::array();
  for (ArcKind k : s.kinds) kinds.push_back(std::string(to_token(k)));
  json tau = json::array();
  for (double t : s.tau) tau.push_back(num9(t));
  return {{"kinds", kinds}, {"tau", tau}};
}

ArcStructure structure_from_json(const json& j, double horizon) {
  try {
    ArcStructure s;
    for (const auto& k : j.at("kinds")) s.kinds.push_back(parse_arc_kind(k.get<std::string>()));
    if (j.contains("tau") && !j.at("tau").empty()) {
      s.tau = j.at("tau").get<std::vector<double>>();
    } else {
      for (int k = 1; k < s.arcs(); ++k) s.tau.push_back(horizon * k / s.arcs());
    }
    return s;
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("malformed structure: ") + e.what());
  }
}

json omega_json(const ProblemDef& p, const ArcStructure& s, const ShootingVector& w, int steps) {
  const ShootingLayout l = ShootingLayout::of(p, s);
  json flat = json::array();
  const Vector packed = w.pack();
  for (int i = 0; i < packed.size(); ++i) flat.push_back(num9(packed(i)));
  return {{"structure", structure_json(s)},
          {"omega", flat},
          {"meta",
           {{"N", l.arcs}, {"n", l.n}, {"q", l.q}, {"steps", steps}, {"nC", l.constrained},
            {"nS", l.singular}}}};
}

WarmStart warm_start_from_json(const json& j, const ProblemDef& p) {
  try {
    WarmStart ws;
    ws.structure = structure_from_json(j.at("structure"), p.horizon);
    const ShootingLayout l = ShootingLayout::of(p, ws.structure);
    const json& meta = j.at("meta");
    if (meta.at("N").get<int>() != l.arcs || meta.at("n").get<int>() != l.n ||
        meta.at("q").get<int>() != l.q ||
        (meta.contains("nC") && meta.at("nC").get<int>() != l.constrained) ||
        (meta.contains("nS") && meta.at("nS").get<int>() != l.singular)) {
      throw ConfigurationError("warm-start header does not match the problem and structure");
    }
    ws.steps = meta.value("steps", 0);
    const auto values = j.at("omega").get<std::vector<double>>();
    ws.omega = ShootingVector::unpack(Eigen::Map<const Vector>(values.data(), values.size()), l);
    return ws;
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("malformed warm-start file: ") + e.what());
  }
}

json convergence_json(const ConvergenceReport& r) {
  json its = json::array();
  for (const auto& it : r.iterations) {
    its.push_back({{"residual_norm", num9(it.residual_norm)},
                   {"step_norm", num9(it.step_norm)},
                   {"step_scale", num9(it.step_scale)}});
  }
  return {{"iterations", its},
          {"initial_residual", num9(r.initial_residual)},
          {"final_residual", num9(r.final_residual)},
          {"jacobian_rank", r.jacobian_rank},
          {"unknowns", r.unknowns},
          {"equations", r.equations},
          {"smallest_singular_value", num9(r.smallest_singular_value)},
          {"order_estimate", r.order_estimate ? num9(*r.order_estimate) : json(nullptr)},
          {"converged", r.converged},
          {"stop_reason", r.stop_reason}};
}

json validation_json(const ValidationReport& r) {
  json junctions = json::array();
  for (const auto& j : r.junctions) {
    junctions.push_back({{"junction", j.junction + 1},
                         {"control_jump", num9(j.control_jump)},
                         {"hamiltonian_mismatch", num9(j.hamiltonian_mismatch)}});
  }
  json hv = json::array();
  for (double v : r.hamiltonian_variation) hv.push_back(num9(v));
  return {{"pass", r.pass()},
          {"findings", r.findings},
          {"control_margin", num9(r.control_margin)},
          {"junctions", junctions},
          {"first_order_min_denominator", num9(r.first_order.min_abs_denominator)},
          {"legendre_clebsch_violations", r.legendre_clebsch.legendre_clebsch_violations},
          {"nu_min", num9(r.nu_min)},
          {"g_max", num9(r.g_max)},
          {"hamiltonian_variation", hv}};
}

json positivity_json(const PositivityReport& r) {
  json j = {{"c_est", num9(r.c_est)},
            {"nullspace_dim", r.nullspace_dim},
            {"goh_asymmetry", num9(r.goh_asymmetry)},
            {"pass", r.pass},
            {"lambda_max", num9(r.lambda_max)}};
  if (!r.warning.empty()) j["warning"] = r.warning;
  return j;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigurationError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

Matrix matrix_from_json(const json& j) {
  try {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    const int r = static_cast<int>(rows.size());
    const int c = r ? static_cast<int>(rows.front().size()) : 0;
    Matrix m(r, c);
    for (int i = 0; i < r; ++i) {
      if (static_cast<int>(rows[i].size()) != c) throw ConfigurationError("ragged matrix");
      for (int k = 0; k < c; ++k) m(i, k) = rows[i][k];
    }
    return m;
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("malformed matrix: ") + e.what());
  }
}

}  // namespace arcshoot::io
