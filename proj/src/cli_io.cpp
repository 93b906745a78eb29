#include "opsplit/cli_io.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "opsplit/errors.hpp"
#include "opsplit/mesh.hpp"
#include "opsplit/reference_data.hpp"

namespace opsplit {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::set<std::string> kKnownKeys = {
    "command", "problem",   "n",           "T",         "N",         "dt",
    "m",       "Re",        "lumped_mass", "rel_tol",   "eps",       "output_dir",
    "emit_vtk", "emit_csv", "emit_summary", "axis",     "ladder",    "dt_seed",
    "steady_tolerance", "max_steps",
};

template <class T>
T get_as(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

template <class T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = get_as<T>(j, key);
}

template <class T>
void read_if(const json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key)) out = get_as<T>(j, key);
}

double problem_final_time(const RunConfig& c) {
  if (c.final_time > 0.0) return c.final_time;
  const ProblemId id{*c.problem, c.reynolds};
  const Problem p = make_problem(id);
  return std::visit([](const auto& q) { return q.final_time; }, p);
}

RunSpec spec_from(const RunConfig& c) {
  RunSpec spec;
  spec.problem = {*c.problem, c.reynolds};
  spec.n = c.n;
  spec.m = c.m;
  spec.final_time = c.final_time;
  spec.lumped_mass = c.lumped_mass;
  spec.diffusion_solver.rel_tol = c.rel_tol;
  spec.eps = c.eps;
  if (c.dt) {
    spec.dt = *c.dt;
  } else if (c.steps) {
    spec.dt = problem_final_time(c) / *c.steps;
  }
  return spec;
}

std::string hex(const unsigned char* data, unsigned int n) {
  std::ostringstream os;
  for (unsigned int i = 0; i < n; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(data[i]);
  return os.str();
}

std::string opt_number(const std::optional<double>& v) { return v ? csv_number(*v) : ""; }
std::string opt_short(const std::optional<double>& v) { return v ? short_format(*v) : ""; }

void write_summary(const fs::path& dir, const RunConfig& config,
                   const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ostringstream os;
  os << "command: " << to_string(config.command) << '\n';
  os << "config_hash: " << config_hash(config) << '\n';
  for (const auto& [k, v] : entries) os << k << ": " << v << '\n';
  os << "config: " << config_to_json(config).dump() << '\n';
  atomic_write(dir / "summary.txt", os.str());
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

int command_run(const RunConfig& config, const fs::path& dir, std::ostream& log) {
  const RunSpec spec = spec_from(config);
  CsvTable steps{{"step", "time", "max_abs", "coefficient_norm"}, {}};
  const RunResult r = run_single(spec, [&](int step, double t, std::span<const double> u) {
    steps.rows.push_back({std::to_string(step), csv_number(t), csv_number(norm_inf(u)),
                          csv_number(norm2(u))});
  });
  log << to_string(*config.problem) << ": " << r.steps << " steps to t = " << r.time
      << (r.diverged ? " (diverged)" : "") << ", L2 error " << short_format(r.error) << '\n';
  if (config.emit_csv) atomic_write(dir / "steps.csv", steps.str());
  if (config.emit_vtk) {
    std::vector<VtkField> fields{{config.problem && ProblemId{*config.problem}.is_navier_stokes()
                                      ? "velocity"
                                      : "u",
                                  r.space.get(), r.state}};
    if (r.pressure_space) fields.push_back({"pressure", r.pressure_space.get(), r.pressure});
    atomic_write(dir / "fields.vtk", vtk_legacy(r.space->mesh(), fields));
  }
  if (config.emit_summary) {
    std::vector<std::pair<std::string, std::string>> e = {
        {"diverged", bool_str(r.diverged)},
        {"steps", std::to_string(r.steps)},
        {"time", csv_number(r.time)},
        {"max_abs", csv_number(r.max_abs)},
        {"l2_error", csv_number(r.error)},
        {"l2_error_short", short_format(r.error)},
        {"relative_error", csv_number(r.relative_error)},
        {"seconds", csv_number(r.seconds)},
    };
    if (r.pressure_error) e.push_back({"pressure_l2_error", csv_number(*r.pressure_error)});
    write_summary(dir, config, e);
  }
  return r.diverged ? kExitDiverged : kExitOk;
}

int command_converge(const RunConfig& config, const fs::path& dir, std::ostream& log) {
  StudyParams params;
  params.base = spec_from(config);
  params.axis = config.axis == "h" ? Axis::Space : Axis::Time;
  params.ladder = config.ladder;
  params.threads = thread_count_from_env();
  const ConvergenceReport report = run_convergence_study(params);
  const bool ns = ProblemId{*config.problem}.is_navier_stokes();
  CsvTable table;
  table.header = {to_string(report.axis), "error", "error_short", "order"};
  if (ns) {
    table.header.insert(table.header.end(), {"pressure_error", "pressure_error_short", "pressure_order"});
  }
  table.header.insert(table.header.end(), {"diverged", "seconds"});
  for (const auto& row : report.rows) {
    std::vector<std::string> cells = {csv_number(row.resolution),
                                      row.diverged ? "divergence" : csv_number(row.error),
                                      row.diverged ? "divergence" : short_format(row.error),
                                      opt_number(row.order)};
    if (ns) {
      cells.insert(cells.end(), {row.diverged ? "" : opt_number(row.pressure_error),
                                 row.diverged ? "" : opt_short(row.pressure_error),
                                 opt_number(row.pressure_order)});
    }
    cells.insert(cells.end(), {bool_str(row.diverged), csv_number(row.seconds)});
    table.rows.push_back(cells);
    log << to_string(report.axis) << " = " << row.resolution << ": "
        << (row.diverged ? std::string("divergence") : short_format(row.error))
        << (row.order ? "  order " + csv_number(*row.order) : std::string()) << '\n';
  }
  if (config.emit_csv) atomic_write(dir / "convergence.csv", table.str());
  if (config.emit_summary) write_summary(dir, config, {{"rungs", std::to_string(report.rows.size())}});
  return kExitOk;
}

int command_critical_dt(const RunConfig& config, const fs::path& dir, std::ostream& log) {
  CriticalDtParams params;
  params.base = spec_from(config);
  params.dt_seed = config.dt_seed > 0.0 ? config.dt_seed : 0.004 * config.m;
  const CriticalDtResult r = find_critical_dt(params);
  log << "m = " << r.m << ": dt_crit = " << r.dt_crit << " in [" << r.bracket_lo << ", "
      << r.bracket_hi << ")" << (r.unbounded ? " (no instability below ceiling)" : "")
      << (r.budget_exhausted ? " (probe budget exhausted)" : "") << '\n';
  if (config.emit_csv) {
    CsvTable summary{{"m", "dt_crit", "bracket_lo", "bracket_hi", "unbounded", "budget_exhausted",
                      "probes", "reference_relative_error"},
                     {{std::to_string(r.m), csv_number(r.dt_crit), csv_number(r.bracket_lo),
                       csv_number(r.bracket_hi), bool_str(r.unbounded),
                       bool_str(r.budget_exhausted), std::to_string(r.probes.size()),
                       csv_number(r.reference_error)}}};
    atomic_write(dir / "critical_dt.csv", summary.str());
    CsvTable probes{{"dt", "converged", "relative_error"}, {}};
    for (const auto& p : r.probes) {
      probes.rows.push_back({csv_number(p.dt), bool_str(p.converged), csv_number(p.relative_error)});
    }
    atomic_write(dir / "probes.csv", probes.str());
  }
  if (config.emit_summary) {
    write_summary(dir, config, {{"dt_crit", csv_number(r.dt_crit)}, {"unbounded", bool_str(r.unbounded)}});
  }
  return kExitOk;
}

int command_cavity(const RunConfig& config, const fs::path& dir, std::ostream& log) {
  CavityParams params;
  params.reynolds = config.reynolds > 0.0 ? config.reynolds : 1000.0;
  params.n = config.n;
  params.dt = *config.dt;
  params.m = config.m;
  params.tolerance = config.steady_tolerance;
  params.max_steps = config.max_steps;
  params.progress = [&](int step, double inc) {
    if (step % 1000 == 0) log << "step " << step << ": increment " << inc << '\n';
  };
  const CavityReport r = run_cavity(params);
  log << "cavity Re = " << params.reynolds << ": " << r.steps << " steps, "
      << (r.steady ? "steady" : (r.diverged ? "diverged" : "not steady")) << '\n';
  const auto ghia = ghia_data(params.reynolds);

  if (config.emit_csv && !r.diverged) {
    CsvTable vortices{{"vortex", "found", "psi", "psi_short", "x", "y", "ghia_psi", "ghia_x",
                       "ghia_y", "relative_delta"},
                      {}};
    for (const auto& v : r.vortices) {
      std::vector<std::string> row = {v.name, bool_str(v.found), csv_number(v.psi),
                                      short_format(v.psi), csv_number(v.x), csv_number(v.y)};
      const GhiaVortex* ref = nullptr;
      if (ghia) {
        for (const auto& g : ghia->vortices) {
          if (g.name == v.name) ref = &g;
        }
      }
      if (ref) {
        row.insert(row.end(), {csv_number(ref->psi), csv_number(ref->x), csv_number(ref->y),
                               csv_number((v.psi - ref->psi) / std::abs(ref->psi))});
      } else {
        row.insert(row.end(), {"", "", "", ""});
      }
      vortices.rows.push_back(row);
      log << "  " << v.name << ": psi = " << short_format(v.psi) << " at (" << v.x << ", " << v.y
          << ")\n";
    }
    atomic_write(dir / "vortices.csv", vortices.str());

    const auto profile_csv = [](const Profile& p, const char* axis, const char* value) {
      CsvTable t{{axis, value}, {}};
      for (std::size_t k = 0; k < p.coordinate.size(); ++k) {
        t.rows.push_back({csv_number(p.coordinate[k]), csv_number(p.value[k])});
      }
      return t.str();
    };
    atomic_write(dir / "u_x_centerline.csv", profile_csv(r.u_vertical, "y", "u_x"));
    atomic_write(dir / "u_y_centerline.csv", profile_csv(r.v_horizontal, "x", "u_y"));
    atomic_write(dir / "vorticity_x05.csv", profile_csv(r.vorticity_vertical, "y", "omega"));
    atomic_write(dir / "vorticity_y05.csv", profile_csv(r.vorticity_horizontal, "x", "omega"));

    if (ghia && !ghia->y.empty()) {
      CsvTable cmp{{"line", "coordinate", "computed", "ghia", "delta"}, {}};
      const FeSpace& v = *r.velocity_space;
      for (std::size_t k = 0; k < ghia->y.size(); ++k) {
        const double c = v.evaluate(r.velocity, {0.5, ghia->y[k]}, 0);
        cmp.rows.push_back({"x=0.5", csv_number(ghia->y[k]), csv_number(c), csv_number(ghia->u[k]),
                            csv_number(c - ghia->u[k])});
      }
      for (std::size_t k = 0; k < ghia->x.size(); ++k) {
        const double c = v.evaluate(r.velocity, {ghia->x[k], 0.5}, 1);
        cmp.rows.push_back({"y=0.5", csv_number(ghia->x[k]), csv_number(c), csv_number(ghia->v[k]),
                            csv_number(c - ghia->v[k])});
      }
      atomic_write(dir / "ghia_comparison.csv", cmp.str());
    }
  }
  if (config.emit_vtk && !r.diverged) {
    atomic_write(dir / "cavity.vtk",
                 vtk_legacy(r.velocity_space->mesh(),
                            {{"velocity", r.velocity_space.get(), r.velocity},
                             {"pressure", r.scalar_space.get(), r.pressure},
                             {"vorticity", r.scalar_space.get(), r.vorticity},
                             {"streamfunction", r.scalar_space.get(), r.streamfunction}}));
  }
  if (config.emit_summary) {
    std::vector<std::pair<std::string, std::string>> e = {
        {"steady", bool_str(r.steady)},
        {"diverged", bool_str(r.diverged)},
        {"steps", std::to_string(r.steps)},
        {"final_increment", csv_number(r.final_increment)},
        {"seconds", csv_number(r.seconds)},
    };
    if (!r.vortices.empty()) {
      e.push_back({"psi_min", csv_number(r.vortices.front().psi)});
      e.push_back({"psi_min_x", csv_number(r.vortices.front().x)});
      e.push_back({"psi_min_y", csv_number(r.vortices.front().y)});
    }
    write_summary(dir, config, e);
  }
  return r.diverged ? kExitDiverged : kExitOk;
}

}  // namespace

std::string to_string(Command command) {
  switch (command) {
    case Command::Run: return "run";
    case Command::Converge: return "converge";
    case Command::CriticalDt: return "critical-dt";
    case Command::Cavity: return "cavity";
  }
  return "run";
}

Command parse_command(std::string_view name) {
  if (name == "run") return Command::Run;
  if (name == "converge") return Command::Converge;
  if (name == "critical-dt") return Command::CriticalDt;
  if (name == "cavity") return Command::Cavity;
  throw ConfigError("unknown command '" + std::string(name) +
                    "' (expected run, converge, critical-dt or cavity)");
}

void validate(const RunConfig& c) {
  std::vector<std::string> missing;
  if (!c.problem && c.command != Command::Cavity) missing.push_back("problem");
  if (c.n == 0) missing.push_back("n");
  const bool time_ladder = c.command == Command::Converge && c.axis == "dt";
  const bool needs_step = c.command == Command::Run || c.command == Command::Cavity ||
                          (c.command == Command::Converge && !time_ladder);
  if (needs_step && !c.steps && !c.dt) missing.push_back(c.command == Command::Cavity ? "dt" : "N or dt");
  if (c.command == Command::Converge && c.ladder.empty()) missing.push_back("ladder");
  if (!missing.empty()) {
    std::string msg = "missing required config keys:";
    for (const auto& k : missing) msg += " " + k;
    throw ConfigError(msg);
  }
  if (c.n < 1) throw ConfigError("n must be >= 1");
  if (c.m < 1) throw ConfigError("m must be >= 1");
  if (c.steps && c.dt) throw ConfigError("give exactly one of N and dt");
  if (c.steps && *c.steps < 1) throw ConfigError("N must be >= 1");
  if (c.dt && !(*c.dt > 0.0)) throw ConfigError("dt must be positive");
  if (c.final_time < 0.0) throw ConfigError("T must be non-negative");
  if (c.reynolds < 0.0) throw ConfigError("Re must be non-negative");
  if (!(c.rel_tol > 0.0)) throw ConfigError("rel_tol must be positive");
  if (c.eps && !(*c.eps >= 0.0)) throw ConfigError("eps must be non-negative");
  if (c.command == Command::Converge) {
    if (c.axis != "h" && c.axis != "dt") throw ConfigError("axis must be 'h' or 'dt'");
    if (c.ladder.size() < 2) throw ConfigError("ladder needs at least two rungs");
    if (time_ladder && (c.steps || c.dt)) throw ConfigError("a dt ladder replaces N and dt");
  }
  if (c.command == Command::CriticalDt && c.dt_seed < 0.0) throw ConfigError("dt_seed must be positive");
  if (c.command == Command::Cavity) {
    if (c.problem && *c.problem != ProblemKind::Cavity) {
      throw ConfigError("the cavity command only runs the cavity problem");
    }
    if (c.steps) throw ConfigError("cavity takes dt, not N");
    if (!(c.steady_tolerance > 0.0)) throw ConfigError("steady_tolerance must be positive");
    if (c.max_steps < 1) throw ConfigError("max_steps must be >= 1");
  } else if (c.problem && *c.problem == ProblemKind::Cavity) {
    throw ConfigError("the cavity problem is run with the cavity command");
  }
  if (c.eps && c.problem && *c.problem != ProblemKind::CdExample1 &&
      *c.problem != ProblemKind::CdExample2) {
    throw ConfigError("eps applies only to cd-example1 and cd-example2");
  }
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kKnownKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  RunConfig c;
  if (j.contains("command")) c.command = parse_command(get_as<std::string>(j, "command"));
  if (j.contains("problem")) {
    try {
      c.problem = parse_problem_kind(get_as<std::string>(j, "problem"));
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }
  read_if(j, "n", c.n);
  read_if(j, "T", c.final_time);
  read_if(j, "N", c.steps);
  read_if(j, "dt", c.dt);
  read_if(j, "m", c.m);
  read_if(j, "Re", c.reynolds);
  read_if(j, "lumped_mass", c.lumped_mass);
  read_if(j, "rel_tol", c.rel_tol);
  read_if(j, "eps", c.eps);
  read_if(j, "output_dir", c.output_dir);
  read_if(j, "emit_vtk", c.emit_vtk);
  read_if(j, "emit_csv", c.emit_csv);
  read_if(j, "emit_summary", c.emit_summary);
  read_if(j, "axis", c.axis);
  read_if(j, "ladder", c.ladder);
  read_if(j, "dt_seed", c.dt_seed);
  read_if(j, "steady_tolerance", c.steady_tolerance);
  read_if(j, "max_steps", c.max_steps);
  if (c.command == Command::Cavity && !c.problem) c.problem = ProblemKind::Cavity;
  validate(c);
  return c;
}

json config_to_json(const RunConfig& c) {
  json j;
  j["command"] = to_string(c.command);
  if (c.problem) j["problem"] = to_string(*c.problem);
  j["n"] = c.n;
  j["T"] = c.final_time;
  if (c.steps) j["N"] = *c.steps;
  if (c.dt) j["dt"] = *c.dt;
  j["m"] = c.m;
  j["Re"] = c.reynolds;
  j["lumped_mass"] = c.lumped_mass;
  j["rel_tol"] = c.rel_tol;
  if (c.eps) j["eps"] = *c.eps;
  j["output_dir"] = c.output_dir;
  j["emit_vtk"] = c.emit_vtk;
  j["emit_csv"] = c.emit_csv;
  j["emit_summary"] = c.emit_summary;
  j["axis"] = c.axis;
  j["ladder"] = c.ladder;
  j["dt_seed"] = c.dt_seed;
  j["steady_tolerance"] = c.steady_tolerance;
  j["max_steps"] = c.max_steps;
  return j;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path.string() + "': " + e.what());
  }
  return config_from_json(j);
}

std::string config_hash(const RunConfig& config) {
  const std::string body = config_to_json(config).dump();
  const std::string blob = "blob " + std::to_string(body.size()) + '\0' + body;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), digest, &len, EVP_sha1(), nullptr) != 1) {
    throw Error("config_hash: SHA-1 failed");
  }
  return hex(digest, len);
}

std::string short_format(double value) {
  if (!std::isfinite(value)) return std::isnan(value) ? "nan" : (value > 0 ? "inf" : "-inf");
  if (value == 0.0) return "0.00000";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.5e", value);
  const std::string s(buf);
  const auto e = s.find('e');
  const int exponent = std::stoi(s.substr(e + 1));
  const std::string mantissa = s.substr(0, e);
  if (exponent == 0) return mantissa;
  return mantissa + "(" + std::to_string(exponent) + ")";
}

std::string csv_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string CsvTable::str() const {
  std::ostringstream os;
  const auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) os << (k ? "," : "") << cells[k];
    os << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return os.str();
}

void atomic_write(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::string vtk_legacy(const TriangleMesh& mesh, const std::vector<VtkField>& fields,
                       const std::string& title) {
  std::ostringstream os;
  os << std::setprecision(17);
  const int nv = mesh.num_vertices(), nt = mesh.num_triangles();
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << nv << " double\n";
  for (const auto& p : mesh.vertices) os << p.x << ' ' << p.y << " 0\n";
  os << "CELLS " << nt << ' ' << 4 * nt << '\n';
  for (const auto& t : mesh.triangles) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  os << "CELL_TYPES " << nt << '\n';
  for (int t = 0; t < nt; ++t) os << "5\n";
  if (fields.empty()) return os.str();
  os << "POINT_DATA " << nv << '\n';
  for (const auto& f : fields) {
    if (f.space == nullptr || static_cast<int>(f.coeffs.size()) != f.space->num_dofs()) {
      throw InvalidArgument("vtk_legacy: field '" + f.name + "' does not match its space");
    }
    // Scalar nodes start with the mesh vertices in both P1 and P2.
    if (f.space->components() == 1) {
      os << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
      for (int v = 0; v < nv; ++v) os << f.coeffs[v] << '\n';
    } else {
      os << "VECTORS " << f.name << " double\n";
      for (int v = 0; v < nv; ++v) {
        os << f.coeffs[f.space->dof(0, v)] << ' ' << f.coeffs[f.space->dof(1, v)] << " 0\n";
      }
    }
  }
  return os.str();
}

int thread_count_from_env() {
  const char* raw = std::getenv("OPSPLIT_THREADS");
  if (raw == nullptr || *raw == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(raw, &end, 10);
  if (*end != '\0' || v < 1) throw ConfigError("OPSPLIT_THREADS must be a positive integer");
  return static_cast<int>(v);
}

int run_command(const RunConfig& config, std::ostream& log) {
  try {
    validate(config);
    const fs::path dir(config.output_dir);
    switch (config.command) {
      case Command::Run: return command_run(config, dir, log);
      case Command::Converge: return command_converge(config, dir, log);
      case Command::CriticalDt: return command_critical_dt(config, dir, log);
      case Command::Cavity: return command_cavity(config, dir, log);
    }
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
  }
  return kExitError;
}

}  // namespace opsplit
