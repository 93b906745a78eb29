#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "opsplit/cd_scheme.hpp"
#include "opsplit/ns_scheme.hpp"
#include "opsplit/problems.hpp"

namespace opsplit {

/// One solve of a registered problem.
struct RunSpec {
  ProblemId problem;
  int n = 8;
  double dt = 0.1;
  int m = 1;
  /// 0 selects the problem's final time.
  double final_time = 0.0;
  /// Round the step count up and stretch T to N dt instead of requiring
  /// T / dt to be an integer.
  bool covering = false;
  bool lumped_mass = false;
  SolverConfig diffusion_solver{};
  /// Scalar examples only: replaces eps.
  std::optional<double> eps;
};

struct RunResult {
  bool diverged = false;
  int steps = 0;
  double time = 0.0;
  double seconds = 0.0;
  /// L2 error of the scalar field or the velocity; NaN without exact solution.
  double error = std::numeric_limits<double>::quiet_NaN();
  double relative_error = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> pressure_error;
  double max_abs = 0.0;

  std::shared_ptr<const FeSpace> space;
  std::shared_ptr<const FeSpace> pressure_space;
  Vector state;
  Vector pressure;
};

/// Called after every step with the scalar field or the velocity.
using ProgressCallback =
    std::function<void(int step, double time, std::span<const double> state)>;

RunResult run_single(const RunSpec& spec, const ProgressCallback& progress = {});

enum class Axis { Space, Time };
std::string to_string(Axis axis);

struct ConvergenceRow {
  /// h = 1/n for the space axis, dt for the time axis.
  double resolution = 0.0;
  bool diverged = false;
  double error = 0.0;
  std::optional<double> order;
  std::optional<double> pressure_error;
  std::optional<double> pressure_order;
  double seconds = 0.0;
};

struct ConvergenceReport {
  Axis axis = Axis::Space;
  std::string problem;
  RunSpec fixed;
  std::vector<ConvergenceRow> rows;
};

struct StudyParams {
  RunSpec base;
  Axis axis = Axis::Space;
  /// Mesh subdivisions n (space axis) or global steps dt (time axis), coarse first.
  std::vector<double> ladder;
  int threads = 1;
};

/// One full solve per rung; diverged rungs are recorded, not thrown.
ConvergenceReport run_convergence_study(const StudyParams& params);

struct CriticalDtParams {
  RunSpec base;
  double dt_seed = 0.004;
  double relative_width = 0.05;
  int max_probes = 40;
  /// Probes above this are not attempted; reaching it means no instability found.
  double dt_ceiling = 10.0;
  /// Convergence means no blow-up and relative error <= factor times the
  /// relative error of a reference run at dt_seed / 4.
  double error_factor = 10.0;
};

struct CriticalDtProbe {
  double dt = 0.0;
  bool converged = false;
  double relative_error = 0.0;
};

struct CriticalDtResult {
  int m = 1;
  /// Largest converging probe; 0 if none converged.
  double dt_crit = 0.0;
  double bracket_lo = 0.0;
  /// Smallest diverging probe; infinity if none.
  double bracket_hi = std::numeric_limits<double>::infinity();
  bool unbounded = false;
  bool budget_exhausted = false;
  double reference_error = 0.0;
  std::vector<CriticalDtProbe> probes;
};

CriticalDtResult find_critical_dt(const CriticalDtParams& params);

struct CavityParams {
  double reynolds = 1000.0;
  int n = 64;
  double dt = 0.004;
  int m = 1;
  double tolerance = 1e-5;
  int max_steps = 100000;
  /// Wall-clock cap in seconds; 0 means none.
  double max_seconds = 0.0;
  /// Called every step with the relative increment.
  std::function<void(int step, double increment)> progress;
};

struct Vortex {
  std::string name;
  bool found = false;
  double psi = 0.0;
  double x = 0.0;
  double y = 0.0;
};

struct Profile {
  std::vector<double> coordinate;
  std::vector<double> value;
};

struct CavityReport {
  CavityParams params;
  bool steady = false;
  bool diverged = false;
  bool timed_out = false;
  int steps = 0;
  double final_increment = 0.0;
  double seconds = 0.0;
  /// Primary first, then the secondary windows in a fixed order.
  std::vector<Vortex> vortices;
  Profile u_vertical;    // u_x(0.5, y)
  Profile v_horizontal;  // u_y(x, 0.5)
  Profile vorticity_vertical;
  Profile vorticity_horizontal;

  std::shared_ptr<const FeSpace> velocity_space;
  std::shared_ptr<const FeSpace> scalar_space;
  Vector velocity;
  Vector pressure;
  Vector vorticity;
  Vector streamfunction;
};

CavityReport run_cavity(const CavityParams& params);

/// L2 projection of curl u = d_x u_y - d_y u_x onto the P1 space.
Vector vorticity_projection(const FeSpace& velocity, const FeSpace& scalar,
                            std::span<const double> u);
/// P1 solution of -lap psi = omega, psi = 0 on the boundary.
Vector streamfunction(const FeSpace& velocity, const FeSpace& scalar, std::span<const double> u);
/// Relative increment ||a - b|| / ||a|| in the Euclidean coefficient norm.
double relative_increment(std::span<const double> next, std::span<const double> prev);

}  // namespace opsplit
