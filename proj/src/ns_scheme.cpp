#include "opsplit/ns_scheme.hpp"

#include <cmath>

#include "opsplit/errors.hpp"

namespace opsplit {

struct NsIntegrator::MassEntry {
  std::unique_ptr<ConstrainedSystem> system;
  std::unique_ptr<SpdFactorization> direct;
};

NsIntegrator::NsIntegrator(NsProblem problem, std::shared_ptr<const FeSpace> velocity,
                           std::shared_ptr<const FeSpace> pressure, TimeGrid grid,
                           NsOptions options)
    : problem_(std::move(problem)),
      velocity_(std::move(velocity)),
      pressure_(std::move(pressure)),
      grid_(grid),
      options_(options) {
  if (!velocity_ || !pressure_) throw InvalidArgument("NsIntegrator: null space");
  if (!problem_.g || !problem_.u_b || !problem_.u0) {
    throw InvalidArgument("NsIntegrator: problem is missing g, u_b or u0");
  }
  if (grid_.substeps < 1) throw InvalidArgument("NsIntegrator: multistep index m must be >= 1");
  if (grid_.steps < 0) throw InvalidArgument("NsIntegrator: negative step count");
  stokes_ = stokes_system(velocity_, pressure_, grid_.dt(), problem_.reynolds);
  mass_ = mass_matrix(*velocity_);
  if (options_.lumped_mass) lumped_ = mass_matrix(*velocity_, true).diagonal();
  handle_ = factorize_saddle(*stokes_);
}

NsIntegrator::~NsIntegrator() = default;

NsState NsIntegrator::initial_state() const {
  return {interpolate(*velocity_, problem_.u0, 0.0), Vector(pressure_->num_dofs(), 0.0), 0.0};
}

const NsIntegrator::MassEntry& NsIntegrator::mass_entry(const InflowSet& inflow) const {
  std::lock_guard lock(cache_mutex_);
  auto& slot = mass_cache_[inflow.dof_indices];
  if (!slot) {
    slot = std::make_unique<MassEntry>();
    slot->system = std::make_unique<ConstrainedSystem>(mass_, inflow.dof_indices);
    slot->direct = std::make_unique<SpdFactorization>(slot->system->matrix());
  }
  return *slot;
}

Vector NsIntegrator::convection_substep(std::span<const double> velocity, double t_lo,
                                        double dt) const {
  if (!(dt > 0.0)) throw InvalidArgument("ns convection_substep: dt must be positive");
  if (static_cast<int>(velocity.size()) != velocity_->num_dofs()) {
    throw InvalidArgument("ns convection_substep: state size does not match the space");
  }
  const double t_hi = t_lo + dt;
  const InflowSet inflow = classify_inflow(*velocity_, problem_.u_b, t_hi);
  const Vector rhs = ns_convection_rhs(*velocity_, velocity, dt, &inflow);
  const int nodes = velocity_->num_nodes();
  Vector fixed(inflow.dof_indices.size());
  for (std::size_t k = 0; k < fixed.size(); ++k) {
    const int d = inflow.dof_indices[k];
    const Vec2 v = problem_.u_b(velocity_->dof_coord(d), t_hi);
    fixed[k] = d < nodes ? v.x : v.y;
  }
  Vector out;
  if (options_.lumped_mass) {
    // Lumped on both mass terms: M_L (u_new - u) = rhs - M u.
    out = mass_ * velocity;
    for (std::size_t i = 0; i < rhs.size(); ++i) out[i] = velocity[i] + (rhs[i] - out[i]) / lumped_[i];
  } else {
    const MassEntry& entry = mass_entry(inflow);
    out = entry.direct->solve(entry.system->lift(rhs, fixed));
  }
  for (std::size_t k = 0; k < fixed.size(); ++k) out[inflow.dof_indices[k]] = fixed[k];
  return out;
}

NsState NsIntegrator::stokes_correction(std::span<const double> u_star, double t_new) const {
  if (static_cast<int>(u_star.size()) != velocity_->num_dofs()) {
    throw InvalidArgument("stokes_correction: state size does not match the space");
  }
  std::shared_ptr<StokesSystem> system = stokes_;
  SaddleHandle handle = handle_;
  if (options_.refactor_each_step) {
    system = stokes_system(velocity_, pressure_, grid_.dt(), problem_.reynolds);
    handle = factorize_saddle(*system);
  }
  Vector load = mass_ * u_star;
  const double inv_dt = 1.0 / grid_.dt();
  const Vector g = load_vector(*velocity_, problem_.g, t_new);
  for (std::size_t i = 0; i < load.size(); ++i) load[i] = inv_dt * load[i] + g[i];

  const auto& fixed_dofs = system->fixed_velocity_dofs();
  const int nodes = velocity_->num_nodes();
  Vector fixed(fixed_dofs.size());
  for (std::size_t k = 0; k < fixed.size(); ++k) {
    const Vec2 v = problem_.u_b(velocity_->dof_coord(fixed_dofs[k]), t_new);
    fixed[k] = fixed_dofs[k] < nodes ? v.x : v.y;
  }
  SaddleSolution sol = solve_saddle(handle, system->make_rhs(load, fixed));
  for (std::size_t k = 0; k < fixed.size(); ++k) sol.velocity[fixed_dofs[k]] = fixed[k];
  return {std::move(sol.velocity), std::move(sol.pressure), t_new};
}

NsStepOutcome NsIntegrator::finish(NsState state) const {
  NsStepOutcome outcome;
  double p_max = 0.0;
  const bool bad_u = is_diverged(state.velocity, options_.divergence_threshold, &outcome.max_abs);
  const bool bad_p = is_diverged(state.pressure, options_.divergence_threshold, &p_max);
  outcome.diverged = bad_u || bad_p;
  outcome.state = std::move(state);
  return outcome;
}

NsStepOutcome NsIntegrator::single_step(const NsState& state, int n) const {
  const double t_n = grid_.time(n);
  Vector u_star = convection_substep(state.velocity, t_n, grid_.dt());
  if (is_diverged(u_star, options_.divergence_threshold)) {
    return finish({std::move(u_star), state.pressure, grid_.time(n + 1)});
  }
  return finish(stokes_correction(u_star, grid_.time(n + 1)));
}

NsStepOutcome NsIntegrator::step(const NsState& state, int n) const {
  const double t_n = grid_.time(n);
  const double dt = grid_.dt() / grid_.substeps;
  Vector u_star = state.velocity;
  for (int i = 0; i < grid_.substeps; ++i) {
    u_star = convection_substep(u_star, t_n + i * dt, dt);
    if (is_diverged(u_star, options_.divergence_threshold)) {
      return finish({std::move(u_star), state.pressure, grid_.time(n + 1)});
    }
  }
  return finish(stokes_correction(u_star, grid_.time(n + 1)));
}

NsRunResult NsIntegrator::run(const NsStepObserver& observer) const {
  NsRunResult result;
  result.outcome = finish(initial_state());
  for (int n = 0; n < grid_.steps; ++n) {
    result.outcome = step(result.outcome.state, n);
    result.steps_completed = n + 1;
    if (result.outcome.diverged) break;
    if (observer && !observer(n + 1, result.outcome.state)) {
      result.stopped_early = n + 1 < grid_.steps;
      break;
    }
  }
  return result;
}

double divergence_residual(const StokesSystem& system, std::span<const double> velocity) {
  return norm_inf(system.b() * velocity);
}

double pressure_mean(const StokesSystem& system, std::span<const double> pressure) {
  return dot(system.mean_row(), pressure);
}

}  // namespace opsplit
