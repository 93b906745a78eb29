#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>

#include "opsplit/assembly.hpp"
#include "opsplit/cd_scheme.hpp"
#include "opsplit/linsolve.hpp"
#include "opsplit/problems.hpp"

namespace opsplit {

struct NsState {
  Vector velocity;
  Vector pressure;
  double time = 0.0;
};

struct NsOptions {
  bool lumped_mass = false;
  double divergence_threshold = 1e8;
  /// Rebuild and refactorize the Stokes system every step instead of reusing it.
  bool refactor_each_step = false;
};

struct NsStepOutcome {
  NsState state;
  bool diverged = false;
  double max_abs = 0.0;
};

using NsStepObserver = std::function<bool(int step, const NsState& state)>;

struct NsRunResult {
  NsStepOutcome outcome;
  int steps_completed = 0;
  /// True when the observer asked to stop before the last step.
  bool stopped_early = false;
};

/// Operator-splitting integrator for incompressible Navier-Stokes with
/// Taylor-Hood elements.
class NsIntegrator {
 public:
  NsIntegrator(NsProblem problem, std::shared_ptr<const FeSpace> velocity,
               std::shared_ptr<const FeSpace> pressure, TimeGrid grid, NsOptions options = {});
  ~NsIntegrator();

  const NsProblem& problem() const { return problem_; }
  const FeSpace& velocity_space() const { return *velocity_; }
  const FeSpace& pressure_space() const { return *pressure_; }
  const TimeGrid& grid() const { return grid_; }
  const StokesSystem& stokes() const { return *stokes_; }

  /// Interpolated u0 and zero pressure.
  NsState initial_state() const;

  /// Explicit nonlinear convection step with inflow data u_b(t_lo + dt).
  Vector convection_substep(std::span<const double> velocity, double t_lo, double dt) const;
  /// Generalized Stokes correction at t_new.
  NsState stokes_correction(std::span<const double> u_star, double t_new) const;

  NsStepOutcome single_step(const NsState& state, int n) const;
  NsStepOutcome step(const NsState& state, int n) const;

  /// The observer runs after each step; returning false stops the run.
  NsRunResult run(const NsStepObserver& observer = {}) const;

 private:
  struct MassEntry;
  const MassEntry& mass_entry(const InflowSet& inflow) const;
  NsStepOutcome finish(NsState state) const;

  NsProblem problem_;
  std::shared_ptr<const FeSpace> velocity_;
  std::shared_ptr<const FeSpace> pressure_;
  TimeGrid grid_;
  NsOptions options_;
  CsrMatrix mass_;
  Vector lumped_;
  std::shared_ptr<StokesSystem> stokes_;
  SaddleHandle handle_;

  mutable std::mutex cache_mutex_;
  mutable std::map<std::vector<int>, std::unique_ptr<MassEntry>> mass_cache_;
};

/// Discrete divergence residual max_q |(div u_h, q)| over pressure basis functions.
double divergence_residual(const StokesSystem& system, std::span<const double> velocity);
/// Integral of a P1 pressure field.
double pressure_mean(const StokesSystem& system, std::span<const double> pressure);

}  // namespace opsplit
