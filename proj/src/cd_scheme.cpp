#include "opsplit/cd_scheme.hpp"

#include <cmath>
#include <sstream>

#include "opsplit/assembly.hpp"
#include "opsplit/errors.hpp"

namespace opsplit {

namespace {

void check_grid_inputs(double final_time, int substeps) {
  if (!(final_time > 0.0) || !std::isfinite(final_time)) {
    throw InvalidArgument("time grid: final time must be positive");
  }
  if (substeps < 1) throw InvalidArgument("time grid: multistep index m must be >= 1");
}

}  // namespace

TimeGrid TimeGrid::from_steps(double final_time, int steps, int substeps) {
  check_grid_inputs(final_time, substeps);
  if (steps < 0) throw InvalidArgument("time grid: step count must be non-negative");
  return {final_time, steps, substeps};
}

TimeGrid TimeGrid::from_step_size(double final_time, double dt, int substeps) {
  check_grid_inputs(final_time, substeps);
  if (!(dt > 0.0)) throw InvalidArgument("time grid: dt must be positive");
  const double ratio = final_time / dt;
  const double steps = std::round(ratio);
  if (steps < 1.0 || std::abs(ratio - steps) > 1e-9 * ratio) {
    std::ostringstream os;
    os << "time grid: T = " << final_time << " is not a multiple of dt = " << dt;
    throw InvalidArgument(os.str());
  }
  return {final_time, static_cast<int>(steps), substeps};
}

TimeGrid TimeGrid::covering(double final_time, double dt, int substeps) {
  check_grid_inputs(final_time, substeps);
  if (!(dt > 0.0)) throw InvalidArgument("time grid: dt must be positive");
  const int steps = static_cast<int>(std::ceil(final_time / dt * (1.0 - 1e-12)));
  return {steps * dt, std::max(steps, 1), substeps};
}

bool is_diverged(std::span<const double> u, double threshold, double* max_abs) {
  const double m = norm_inf(u);
  if (max_abs) *max_abs = m;
  return !std::isfinite(m) || m > threshold;
}

struct CdIntegrator::MassEntry {
  std::unique_ptr<ConstrainedSystem> system;
  std::unique_ptr<SpdFactorization> direct;
  std::unique_ptr<PcgSolver> cg;
};

CdIntegrator::CdIntegrator(CdProblem problem, std::shared_ptr<const FeSpace> space, TimeGrid grid,
                           CdOptions options)
    : problem_(std::move(problem)), space_(std::move(space)), grid_(grid), options_(options) {
  if (!space_) throw InvalidArgument("CdIntegrator: null space");
  if (space_->components() != 1) throw InvalidArgument("CdIntegrator: scalar space required");
  if (!problem_.b || !problem_.eps || !problem_.u_b || !problem_.u0) {
    throw InvalidArgument("CdIntegrator: problem is missing b, eps, u_b or u0");
  }
  if (grid_.substeps < 1) throw InvalidArgument("CdIntegrator: multistep index m must be >= 1");
  if (grid_.steps < 0) throw InvalidArgument("CdIntegrator: negative step count");
  options_.diffusion_solver.validate();
  options_.mass_cg.validate();
  mass_ = mass_matrix(*space_);
  if (options_.lumped_mass) lumped_ = mass_matrix(*space_, true).diagonal();
  boundary_dofs_ = space_->all_boundary_dofs();
}

CdIntegrator::~CdIntegrator() = default;

Vector CdIntegrator::initial_state() const { return interpolate(*space_, problem_.u0, 0.0); }

const CdIntegrator::MassEntry& CdIntegrator::mass_entry(const InflowSet& inflow) const {
  std::lock_guard lock(cache_mutex_);
  auto& slot = mass_cache_[inflow.dof_indices];
  if (!slot) {
    slot = std::make_unique<MassEntry>();
    slot->system = std::make_unique<ConstrainedSystem>(mass_, inflow.dof_indices);
    if (options_.mass_solver == MassSolver::Direct) {
      slot->direct = std::make_unique<SpdFactorization>(slot->system->matrix());
    } else {
      slot->cg = std::make_unique<PcgSolver>(slot->system->matrix(), options_.mass_cg);
    }
  }
  return *slot;
}

Vector CdIntegrator::convection_substep(std::span<const double> u, double t_lo, double dt) const {
  if (!(dt > 0.0)) throw InvalidArgument("convection_substep: dt must be positive");
  if (static_cast<int>(u.size()) != space_->num_dofs()) {
    throw InvalidArgument("convection_substep: state size does not match the space");
  }
  const double t_hi = t_lo + dt;
  const InflowSet inflow = classify_inflow(*space_, problem_.b, t_hi);
  const ConvectionCoefficients coeffs{problem_.b, problem_.div_b, problem_.f};
  const Vector rhs = cd_convection_rhs(*space_, u, coeffs, t_lo, dt, &inflow);

  Vector fixed(inflow.dof_indices.size());
  for (std::size_t k = 0; k < fixed.size(); ++k) {
    fixed[k] = problem_.u_b(space_->dof_coord(inflow.dof_indices[k]), t_hi);
  }

  Vector out;
  if (options_.lumped_mass) {
    // Lumped on both mass terms: M_L (u_new - u) = rhs - M u.
    out = mass_ * u;
    for (std::size_t i = 0; i < rhs.size(); ++i) out[i] = u[i] + (rhs[i] - out[i]) / lumped_[i];
  } else {
    const MassEntry& entry = mass_entry(inflow);
    const Vector lifted = entry.system->lift(rhs, fixed);
    out = entry.direct ? entry.direct->solve(lifted) : entry.cg->solve(lifted, u);
  }
  for (std::size_t k = 0; k < fixed.size(); ++k) out[inflow.dof_indices[k]] = fixed[k];
  return out;
}

Vector CdIntegrator::diffusion_correction(std::span<const double> u_star, double t_new) const {
  if (static_cast<int>(u_star.size()) != space_->num_dofs()) {
    throw InvalidArgument("diffusion_correction: state size does not match the space");
  }
  const double dt = grid_.dt();
  Vector rhs = mass_ * u_star;
  if (problem_.g) {
    const Vector load = load_vector(*space_, problem_.g, t_new);
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] += dt * load[i];
  }
  Vector fixed(boundary_dofs_.size());
  for (std::size_t k = 0; k < fixed.size(); ++k) {
    fixed[k] = problem_.u_b(space_->dof_coord(boundary_dofs_[k]), t_new);
  }
  const ScalarField c = problem_.c ? problem_.c : constant_field(0.0);

  Vector out;
  if (problem_.steady_coefficients) {
    {
      std::lock_guard lock(cache_mutex_);
      if (!diffusion_pcg_) {
        const CsrMatrix a = cd_diffusion_system(*space_, dt, problem_.eps, c, t_new);
        diffusion_constraint_ = std::make_unique<ConstrainedSystem>(a, boundary_dofs_);
        diffusion_pcg_ =
            std::make_unique<PcgSolver>(diffusion_constraint_->matrix(), options_.diffusion_solver);
      }
    }
    out = diffusion_pcg_->solve(diffusion_constraint_->lift(rhs, fixed), u_star);
  } else {
    const CsrMatrix a = cd_diffusion_system(*space_, dt, problem_.eps, c, t_new);
    const ConstrainedSystem system(a, boundary_dofs_);
    const PcgSolver pcg(system.matrix(), options_.diffusion_solver);
    out = pcg.solve(system.lift(rhs, fixed), u_star);
  }
  for (std::size_t k = 0; k < fixed.size(); ++k) out[boundary_dofs_[k]] = fixed[k];
  return out;
}

StepOutcome CdIntegrator::finish(Vector u) const {
  StepOutcome outcome;
  outcome.diverged = is_diverged(u, options_.divergence_threshold, &outcome.max_abs);
  outcome.state = std::move(u);
  return outcome;
}

StepOutcome CdIntegrator::single_step(std::span<const double> u, int n) const {
  const double t_n = grid_.time(n);
  Vector u_star = convection_substep(u, t_n, grid_.dt());
  if (is_diverged(u_star, options_.divergence_threshold)) return finish(std::move(u_star));
  return finish(diffusion_correction(u_star, grid_.time(n + 1)));
}

StepOutcome CdIntegrator::step(std::span<const double> u, int n) const {
  const double t_n = grid_.time(n);
  const double dt = grid_.dt() / grid_.substeps;
  Vector u_star(u.begin(), u.end());
  for (int i = 0; i < grid_.substeps; ++i) {
    u_star = convection_substep(u_star, t_n + i * dt, dt);
    if (is_diverged(u_star, options_.divergence_threshold)) return finish(std::move(u_star));
  }
  return finish(diffusion_correction(u_star, grid_.time(n + 1)));
}

CdRunResult CdIntegrator::run(const CdStepObserver& observer) const {
  CdRunResult result;
  result.outcome = finish(initial_state());
  if (observer) observer(0, 0.0, result.outcome.state);
  for (int n = 0; n < grid_.steps; ++n) {
    StepOutcome next;
    try {
      next = step(result.outcome.state, n);
    } catch (const NonConvergenceError&) {
      next = finish(Vector(space_->num_dofs(), std::nan("")));
    } catch (const MatrixPropertyError&) {
      next = finish(Vector(space_->num_dofs(), std::nan("")));
    }
    result.outcome = std::move(next);
    result.time = grid_.time(n + 1);
    result.steps_completed = n + 1;
    if (observer) observer(n + 1, result.time, result.outcome.state);
    if (result.outcome.diverged) break;
  }
  return result;
}

}  // namespace opsplit
