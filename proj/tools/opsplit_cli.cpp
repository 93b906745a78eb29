#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "opsplit/cli_io.hpp"
#include "opsplit/errors.hpp"

namespace {

struct Flags {
  std::string config;
  std::string problem;
  std::optional<int> n;
  std::optional<double> final_time;
  std::optional<int> steps;
  std::optional<double> dt;
  std::optional<int> m;
  double reynolds = 0.0;
  bool lumped = false;
  double rel_tol = 0.0;
  double eps = -1.0;
  std::string out;
  bool vtk = false;
  bool no_csv = false;
  bool no_summary = false;
  std::string axis;
  std::vector<double> ladder;
  double dt_seed = 0.0;
  double tolerance = 0.0;
  int max_steps = 0;
};

void add_options(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON config file; flags override its keys");
  app->add_option("--problem", f.problem,
                  "cd-example1 | cd-example2 | ns-example3 | ns-example4 | cavity | cd-zero | "
                  "ns-zero | cd-pure-diffusion");
  app->add_option("--n", f.n, "mesh subdivisions per side (h = 1/n)");
  app->add_option("--T", f.final_time, "final time (default: problem's)");
  app->add_option("--N", f.steps, "number of global time steps");
  app->add_option("--dt", f.dt, "global time step");
  app->add_option("--m", f.m, "multistep index (default 1)");
  app->add_option("--re", f.reynolds, "Reynolds number (NS problems)");
  app->add_flag("--lumped", f.lumped, "lumped mass in the convection step");
  app->add_option("--rel-tol", f.rel_tol, "relative CG tolerance (default 1e-10)");
  app->add_option("--eps", f.eps, "diffusion coefficient override (cd-example1/2)");
  app->add_option("--out", f.out, "output directory (default ./out)");
  app->add_flag("--vtk", f.vtk, "write legacy VTK fields");
  app->add_flag("--no-csv", f.no_csv, "skip CSV output");
  app->add_flag("--no-summary", f.no_summary, "skip summary.txt");
}

nlohmann::json overlay(const std::string& command, const Flags& f) {
  nlohmann::json j = nlohmann::json::object();
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw opsplit::ConfigError("cannot open config file '" + f.config + "'");
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw opsplit::ConfigError("config file '" + f.config + "': " + e.what());
    }
  }
  j["command"] = command;
  if (!f.problem.empty()) j["problem"] = f.problem;
  if (f.n) j["n"] = *f.n;
  if (f.final_time) j["T"] = *f.final_time;
  if (f.steps) j["N"] = *f.steps;
  if (f.dt) j["dt"] = *f.dt;
  if (f.m) j["m"] = *f.m;
  if (f.reynolds > 0) j["Re"] = f.reynolds;
  if (f.lumped) j["lumped_mass"] = true;
  if (f.rel_tol > 0) j["rel_tol"] = f.rel_tol;
  if (f.eps >= 0) j["eps"] = f.eps;
  if (!f.out.empty()) j["output_dir"] = f.out;
  if (f.vtk) j["emit_vtk"] = true;
  if (f.no_csv) j["emit_csv"] = false;
  if (f.no_summary) j["emit_summary"] = false;
  if (!f.axis.empty()) j["axis"] = f.axis;
  if (!f.ladder.empty()) j["ladder"] = f.ladder;
  if (f.dt_seed > 0) j["dt_seed"] = f.dt_seed;
  if (f.tolerance > 0) j["steady_tolerance"] = f.tolerance;
  if (f.max_steps) j["max_steps"] = f.max_steps;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Operator-splitting finite element solver for convection-diffusion and "
               "incompressible Navier-Stokes problems"};
  app.require_subcommand(1);
  Flags flags;

  auto* run = app.add_subcommand("run", "single solve of a registered problem");
  add_options(run, flags);
  auto* converge = app.add_subcommand("converge", "convergence study over a mesh or dt ladder");
  add_options(converge, flags);
  converge->add_option("--axis", flags.axis, "h (ladder of n) or dt (ladder of dt)");
  converge->add_option("--ladder", flags.ladder, "rungs, coarse first")->delimiter(',');
  auto* critical = app.add_subcommand("critical-dt", "largest stable global step for index m");
  add_options(critical, flags);
  critical->add_option("--dt-seed", flags.dt_seed, "starting probe (default 0.004 m)");
  auto* cavity = app.add_subcommand("cavity", "lid-driven cavity to steady state");
  add_options(cavity, flags);
  cavity->add_option("--tol", flags.tolerance, "steady-state increment tolerance (default 1e-5)");
  cavity->add_option("--max-steps", flags.max_steps, "step budget (default 100000)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : opsplit::kExitError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const opsplit::RunConfig config = opsplit::config_from_json(overlay(command, flags));
    return opsplit::run_command(config, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return opsplit::kExitError;
  }
}
