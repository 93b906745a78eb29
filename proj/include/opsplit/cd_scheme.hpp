#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>

#include "opsplit/fe_space.hpp"
#include "opsplit/linsolve.hpp"
#include "opsplit/problems.hpp"

namespace opsplit {

/// Uniform global steps t_n = n T / N, each split into m convection substeps.
struct TimeGrid {
  double final_time = 1.0;
  int steps = 1;
  int substeps = 1;

  double dt() const { return final_time / steps; }
  double local_dt() const { return dt() / substeps; }
  double time(int n) const { return final_time * n / steps; }

  static TimeGrid from_steps(double final_time, int steps, int substeps = 1);
  /// Requires T / dt to be an integer up to 1e-9 relative.
  static TimeGrid from_step_size(double final_time, double dt, int substeps = 1);
  /// N = ceil(T / dt) steps of exactly dt; the final time becomes N dt.
  static TimeGrid covering(double final_time, double dt, int substeps = 1);
};

struct StepOutcome {
  Vector state;
  bool diverged = false;
  double max_abs = 0.0;
};

/// Blow-up test shared by the integrators.
bool is_diverged(std::span<const double> u, double threshold, double* max_abs = nullptr);

enum class MassSolver { Direct, JacobiCg };

struct CdOptions {
  bool lumped_mass = false;
  MassSolver mass_solver = MassSolver::Direct;
  SolverConfig mass_cg{1e-12, 1e-16, 0, Preconditioner::Jacobi};
  SolverConfig diffusion_solver{};
  double divergence_threshold = 1e8;
};

using CdStepObserver = std::function<void(int step, double time, std::span<const double> u)>;

struct CdRunResult {
  StepOutcome outcome;
  int steps_completed = 0;
  double time = 0.0;
};

/// Operator-splitting integrator for the scalar problem: m explicit
/// convection substeps followed by one implicit diffusion correction.
class CdIntegrator {
 public:
  CdIntegrator(CdProblem problem, std::shared_ptr<const FeSpace> space, TimeGrid grid,
               CdOptions options = {});
  ~CdIntegrator();

  const CdProblem& problem() const { return problem_; }
  const FeSpace& space() const { return *space_; }
  const TimeGrid& grid() const { return grid_; }
  const CdOptions& options() const { return options_; }

  Vector initial_state() const;

  /// One explicit convection step from t_lo to t_lo + dt with Dirichlet data
  /// on the inflow boundary at t_lo + dt.
  Vector convection_substep(std::span<const double> u, double t_lo, double dt) const;
  /// Implicit correction at t_new with full Dirichlet data.
  Vector diffusion_correction(std::span<const double> u_star, double t_new) const;

  /// Single-step scheme (one convection step of size dt).
  StepOutcome single_step(std::span<const double> u, int n) const;
  /// Multistep scheme with index grid().substeps.
  StepOutcome step(std::span<const double> u, int n) const;

  /// Interpolates u0 and takes grid().steps steps, stopping at divergence.
  CdRunResult run(const CdStepObserver& observer = {}) const;

 private:
  struct MassEntry;
  const MassEntry& mass_entry(const InflowSet& inflow) const;
  const PcgSolver& diffusion_solver(double t_new) const;
  StepOutcome finish(Vector u) const;

  CdProblem problem_;
  std::shared_ptr<const FeSpace> space_;
  TimeGrid grid_;
  CdOptions options_;
  CsrMatrix mass_;
  Vector lumped_;
  std::vector<int> boundary_dofs_;

  mutable std::mutex cache_mutex_;
  mutable std::map<std::vector<int>, std::unique_ptr<MassEntry>> mass_cache_;
  mutable std::unique_ptr<ConstrainedSystem> diffusion_constraint_;
  mutable std::unique_ptr<PcgSolver> diffusion_pcg_;
};

}  // namespace opsplit
