#include "opsplit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "opsplit/assembly.hpp"
#include "opsplit/errors.hpp"
#include "opsplit/mesh.hpp"

namespace opsplit {
namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

TimeGrid make_grid(const RunSpec& spec, double problem_final_time) {
  const double t = spec.final_time > 0.0 ? spec.final_time : problem_final_time;
  return spec.covering ? TimeGrid::covering(t, spec.dt, spec.m)
                       : TimeGrid::from_step_size(t, spec.dt, spec.m);
}

double relative(double error, double reference) {
  return reference > 0.0 ? error / reference : error;
}

RunResult run_cd(const RunSpec& spec, const ProgressCallback& progress) {
  const auto start = std::chrono::steady_clock::now();
  CdProblem problem = spec.eps ? with_diffusion(spec.problem, *spec.eps) : make_cd_problem(spec.problem);
  RunResult out;
  out.space = build_space(build_uniform_unit_square(spec.n), 1, 1);
  CdOptions options;
  options.lumped_mass = spec.lumped_mass;
  options.diffusion_solver = spec.diffusion_solver;
  const CdIntegrator integrator(problem, out.space, make_grid(spec, problem.final_time), options);
  const CdRunResult run = integrator.run([&](int step, double t, std::span<const double> u) {
    if (progress) progress(step, t, u);
  });
  out.diverged = run.outcome.diverged;
  out.steps = run.steps_completed;
  out.time = run.time;
  out.max_abs = run.outcome.max_abs;
  out.state = run.outcome.state;
  if (problem.exact) {
    out.error = l2_error(*out.space, out.state, problem.exact, out.time);
    const Vector zero(out.state.size(), 0.0);
    out.relative_error = relative(out.error, l2_error(*out.space, zero, problem.exact, out.time));
  }
  out.seconds = seconds_since(start);
  return out;
}

RunResult run_ns(const RunSpec& spec, const ProgressCallback& progress) {
  const auto start = std::chrono::steady_clock::now();
  const NsProblem problem = make_ns_problem(spec.problem);
  RunResult out;
  const auto mesh = build_uniform_unit_square(spec.n);
  out.space = build_space(mesh, 2, 2);
  out.pressure_space = build_space(mesh, 1, 1);
  NsOptions options;
  options.lumped_mass = spec.lumped_mass;
  const NsIntegrator integrator(problem, out.space, out.pressure_space,
                                make_grid(spec, problem.final_time), options);
  const NsRunResult run = integrator.run([&](int step, const NsState& s) {
    if (progress) progress(step, s.time, s.velocity);
    return true;
  });
  out.diverged = run.outcome.diverged;
  out.steps = run.steps_completed;
  out.time = run.outcome.state.time;
  out.max_abs = run.outcome.max_abs;
  out.state = run.outcome.state.velocity;
  out.pressure = run.outcome.state.pressure;
  if (problem.exact_velocity) {
    out.error = l2_error(*out.space, out.state, problem.exact_velocity, out.time);
    const Vector zero(out.state.size(), 0.0);
    out.relative_error =
        relative(out.error, l2_error(*out.space, zero, problem.exact_velocity, out.time));
  }
  if (problem.exact_pressure) {
    out.pressure_error = l2_error(*out.pressure_space, out.pressure, problem.exact_pressure, out.time);
  }
  out.seconds = seconds_since(start);
  return out;
}

/// Runs f(0..count-1) on up to `threads` workers.
template <class F>
void parallel_for(int count, int threads, F&& f) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          f(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::optional<double> order_between(const ConvergenceRow& coarse, const ConvergenceRow& fine,
                                    double e_coarse, double e_fine) {
  if (coarse.diverged || fine.diverged) return std::nullopt;
  if (!(e_coarse > 0.0) || !(e_fine > 0.0) || !std::isfinite(e_coarse) || !std::isfinite(e_fine)) {
    return std::nullopt;
  }
  const double e[] = {e_coarse, e_fine};
  return convergence_order(e).front();
}

}  // namespace

RunResult run_single(const RunSpec& spec, const ProgressCallback& progress) {
  if (spec.n < 1) throw InvalidArgument("run: mesh subdivision n must be >= 1");
  if (spec.m < 1) throw InvalidArgument("run: multistep index m must be >= 1");
  return spec.problem.is_navier_stokes() ? run_ns(spec, progress) : run_cd(spec, progress);
}

std::string to_string(Axis axis) { return axis == Axis::Space ? "h" : "dt"; }

ConvergenceReport run_convergence_study(const StudyParams& params) {
  if (params.ladder.size() < 2) throw InvalidArgument("convergence study: ladder needs >= 2 rungs");
  ConvergenceReport report;
  report.axis = params.axis;
  report.problem = to_string(params.base.problem.kind);
  report.fixed = params.base;
  report.rows.resize(params.ladder.size());
  std::vector<RunResult> results(params.ladder.size());

  parallel_for(static_cast<int>(params.ladder.size()), params.threads, [&](int k) {
    RunSpec spec = params.base;
    if (params.axis == Axis::Space) {
      spec.n = static_cast<int>(std::lround(params.ladder[k]));
    } else {
      spec.dt = params.ladder[k];
    }
    results[k] = run_single(spec);
    ConvergenceRow& row = report.rows[k];
    row.resolution = params.axis == Axis::Space ? 1.0 / spec.n : spec.dt;
    row.diverged = results[k].diverged;
    row.error = results[k].error;
    row.pressure_error = results[k].pressure_error;
    row.seconds = results[k].seconds;
  });

  for (std::size_t k = 1; k < report.rows.size(); ++k) {
    const auto& coarse = report.rows[k - 1];
    auto& fine = report.rows[k];
    fine.order = order_between(coarse, fine, coarse.error, fine.error);
    if (coarse.pressure_error && fine.pressure_error) {
      fine.pressure_order = order_between(coarse, fine, *coarse.pressure_error, *fine.pressure_error);
    }
  }
  return report;
}

CriticalDtResult find_critical_dt(const CriticalDtParams& params) {
  if (!(params.dt_seed > 0.0)) throw InvalidArgument("critical dt: seed must be positive");
  if (!(params.relative_width > 0.0)) throw InvalidArgument("critical dt: width must be positive");
  CriticalDtResult result;
  result.m = params.base.m;
  int budget = params.max_probes;

  const auto run_at = [&](double dt) {
    RunSpec spec = params.base;
    spec.dt = dt;
    spec.covering = true;
    return run_single(spec);
  };

  double seed = params.dt_seed;
  for (;;) {
    if (budget-- <= 0) {
      result.budget_exhausted = true;
      return result;
    }
    const RunResult ref = run_at(seed / 4.0);
    if (!ref.diverged && std::isfinite(ref.relative_error)) {
      result.reference_error = ref.relative_error;
      break;
    }
    seed /= 4.0;
  }

  const auto probe = [&](double dt) {
    --budget;
    const RunResult r = run_at(dt);
    const bool ok = !r.diverged && std::isfinite(r.relative_error) &&
                    r.relative_error <= params.error_factor * result.reference_error;
    result.probes.push_back({dt, ok, r.relative_error});
    if (ok) {
      result.bracket_lo = std::max(result.bracket_lo, dt);
    } else {
      result.bracket_hi = std::min(result.bracket_hi, dt);
    }
    return ok;
  };

  if (probe(seed)) {
    double dt = seed;
    for (;;) {
      dt *= 2.0;
      if (dt > params.dt_ceiling) {
        result.unbounded = true;
        break;
      }
      if (budget <= 0) {
        result.budget_exhausted = true;
        break;
      }
      if (!probe(dt)) break;
    }
  } else {
    double dt = seed;
    for (;;) {
      dt /= 2.0;
      if (budget <= 0) {
        result.budget_exhausted = true;
        break;
      }
      if (probe(dt)) break;
    }
  }

  while (!result.unbounded && result.bracket_lo > 0.0 && std::isfinite(result.bracket_hi) &&
         (result.bracket_hi - result.bracket_lo) > params.relative_width * result.bracket_lo) {
    if (budget <= 0) {
      result.budget_exhausted = true;
      break;
    }
    probe(0.5 * (result.bracket_lo + result.bracket_hi));
  }
  result.dt_crit = result.bracket_lo;
  return result;
}

double relative_increment(std::span<const double> next, std::span<const double> prev) {
  if (next.size() != prev.size()) throw InvalidArgument("relative_increment: size mismatch");
  double diff = 0.0;
  for (std::size_t i = 0; i < next.size(); ++i) diff += (next[i] - prev[i]) * (next[i] - prev[i]);
  const double base = norm2(next);
  return base > 0.0 ? std::sqrt(diff) / base : std::sqrt(diff);
}

namespace {

/// (curl u_h, phi_i) for the scalar P1 basis.
Vector curl_load(const FeSpace& velocity, const FeSpace& scalar, std::span<const double> u) {
  if (velocity.components() != 2 || scalar.components() != 1 ||
      velocity.mesh_ptr() != scalar.mesh_ptr()) {
    throw InvalidArgument("vorticity: need vector velocity and scalar space on one mesh");
  }
  if (static_cast<int>(u.size()) != velocity.num_dofs()) {
    throw InvalidArgument("vorticity: velocity size does not match the space");
  }
  const auto& rule = triangle_rule_degree6();
  Vector out(scalar.num_dofs(), 0.0);
  std::array<Vec2, 6> grad{};
  std::array<double, 6> phi{};
  for (int tri = 0; tri < velocity.mesh().num_triangles(); ++tri) {
    const ElementGeometry geo = element_geometry(velocity.mesh(), tri);
    const auto vnodes = velocity.cell_nodes(tri);
    const auto snodes = scalar.cell_nodes(tri);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      shape::gradients(velocity.degree(), rule.points[q], geo, grad);
      shape::values(scalar.degree(), rule.points[q], phi);
      double curl = 0.0;
      for (std::size_t a = 0; a < vnodes.size(); ++a) {
        curl += u[velocity.dof(1, vnodes[a])] * grad[a].x - u[velocity.dof(0, vnodes[a])] * grad[a].y;
      }
      const double w = rule.weights[q] * 2.0 * geo.area * curl;
      for (std::size_t i = 0; i < snodes.size(); ++i) out[snodes[i]] += w * phi[i];
    }
  }
  return out;
}

struct Window {
  const char* name;
  double x0, x1, y0, y1;
  bool maximum;
};

constexpr Window kWindows[] = {
    {"first-BL", 0.0, 0.3, 0.0, 0.3, true},     {"first-BR", 0.7, 1.0, 0.0, 0.3, true},
    {"first-T", 0.0, 0.3, 0.7, 1.0, true},      {"second-BL", 0.0, 0.06, 0.0, 0.06, false},
    {"second-BR", 0.94, 1.0, 0.0, 0.06, false},
};

Vortex find_vortex(const FeSpace& space, std::span<const double> psi, const Window& w) {
  Vortex v;
  v.name = w.name;
  for (int node = 0; node < space.num_nodes(); ++node) {
    const Point p = space.node_coord(node);
    if (p.x < w.x0 || p.x > w.x1 || p.y < w.y0 || p.y > w.y1) continue;
    const double value = psi[node];
    const bool better = w.maximum ? value > v.psi : value < v.psi;
    if (better) {
      v.found = true;
      v.psi = value;
      v.x = p.x;
      v.y = p.y;
    }
  }
  return v;
}

Profile sample_line(const FeSpace& space, std::span<const double> coeffs, int component,
                    bool vertical, int samples) {
  Profile out;
  for (int k = 0; k < samples; ++k) {
    const double s = static_cast<double>(k) / (samples - 1);
    const Point p = vertical ? Point{0.5, s} : Point{s, 0.5};
    out.coordinate.push_back(s);
    out.value.push_back(space.evaluate(coeffs, p, component));
  }
  return out;
}

}  // namespace

Vector vorticity_projection(const FeSpace& velocity, const FeSpace& scalar,
                            std::span<const double> u) {
  const SpdFactorization mass(mass_matrix(scalar));
  return mass.solve(curl_load(velocity, scalar, u));
}

Vector streamfunction(const FeSpace& velocity, const FeSpace& scalar, std::span<const double> u) {
  const std::vector<int> boundary = scalar.all_boundary_dofs();
  const ConstrainedSystem system(stiffness_matrix(scalar), boundary);
  const SpdFactorization chol(system.matrix());
  const Vector zeros(boundary.size(), 0.0);
  Vector psi = chol.solve(system.lift(curl_load(velocity, scalar, u), zeros));
  for (int d : boundary) psi[d] = 0.0;
  return psi;
}

CavityReport run_cavity(const CavityParams& params) {
  if (!(params.reynolds > 0.0)) throw InvalidArgument("cavity: Reynolds number must be positive");
  if (params.max_steps < 1) throw InvalidArgument("cavity: step budget must be positive");
  const auto start = std::chrono::steady_clock::now();
  CavityReport report;
  report.params = params;
  const auto mesh = build_uniform_unit_square(params.n);
  report.velocity_space = build_space(mesh, 2, 2);
  report.scalar_space = build_space(mesh, 1, 1);
  const NsProblem problem = make_ns_problem({ProblemKind::Cavity, params.reynolds});
  const TimeGrid grid = TimeGrid::from_steps(params.max_steps * params.dt, params.max_steps, params.m);
  const NsIntegrator integrator(problem, report.velocity_space, report.scalar_space, grid);

  Vector previous = integrator.initial_state().velocity;
  const NsRunResult run = integrator.run([&](int step, const NsState& s) {
    report.final_increment = relative_increment(s.velocity, previous);
    previous = s.velocity;
    if (params.progress) params.progress(step, report.final_increment);
    if (params.max_seconds > 0.0 && seconds_since(start) > params.max_seconds) {
      report.timed_out = true;
      return false;
    }
    return !(report.final_increment <= params.tolerance);
  });
  report.diverged = run.outcome.diverged;
  report.steps = run.steps_completed;
  report.steady = !report.diverged && report.final_increment <= params.tolerance;
  report.velocity = run.outcome.state.velocity;
  report.pressure = run.outcome.state.pressure;

  const FeSpace& v = *report.velocity_space;
  const FeSpace& s = *report.scalar_space;
  if (!report.diverged) {
    report.vorticity = vorticity_projection(v, s, report.velocity);
    report.streamfunction = streamfunction(v, s, report.velocity);
    Vortex primary = find_vortex(s, report.streamfunction, {"primary", 0.0, 1.0, 0.0, 1.0, false});
    report.vortices.push_back(primary);
    for (const auto& w : kWindows) report.vortices.push_back(find_vortex(s, report.streamfunction, w));
    constexpr int kSamples = 129;
    report.u_vertical = sample_line(v, report.velocity, 0, true, kSamples);
    report.v_horizontal = sample_line(v, report.velocity, 1, false, kSamples);
    report.vorticity_vertical = sample_line(s, report.vorticity, 0, true, kSamples);
    report.vorticity_horizontal = sample_line(s, report.vorticity, 0, false, kSamples);
  }
  report.seconds = seconds_since(start);
  return report;
}

}  // namespace opsplit
