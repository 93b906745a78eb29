#include "opsplit/problems.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "opsplit/errors.hpp"
#include "opsplit/quadrature.hpp"

namespace opsplit {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct KindName {
  ProblemKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {ProblemKind::CdExample1, "cd-example1"}, {ProblemKind::CdExample2, "cd-example2"},
    {ProblemKind::NsExample3, "ns-example3"}, {ProblemKind::NsExample4, "ns-example4"},
    {ProblemKind::Cavity, "cavity"},          {ProblemKind::CdZero, "cd-zero"},
    {ProblemKind::NsZero, "ns-zero"},         {ProblemKind::CdPureDiffusion, "cd-pure-diffusion"},
};

ScalarField zero_field() { return constant_field(0.0); }
VectorField zero_vector_field() { return constant_vector_field({0.0, 0.0}); }

CdProblem example1(double eps) {
  CdProblem p;
  p.name = "cd-example1";
  p.b = constant_vector_field({1.0, -1.0});
  p.eps = constant_field(eps);
  p.c = constant_field(1.0);
  p.exact = [](Point x, double t) {
    return std::exp(kTwoPi * t) * std::sin(kTwoPi * x.x) * std::sin(kTwoPi * x.y);
  };
  p.g = [eps](Point x, double t) {
    const double e = std::exp(kTwoPi * t);
    const double sx = std::sin(kTwoPi * x.x), cx = std::cos(kTwoPi * x.x);
    const double sy = std::sin(kTwoPi * x.y), cy = std::cos(kTwoPi * x.y);
    const double u = e * sx * sy;
    const double u_t = kTwoPi * u;
    const double lap = -2.0 * kTwoPi * kTwoPi * u;
    const double convection = kTwoPi * e * (cx * sy - sx * cy);
    return u_t + convection - eps * lap + u;
  };
  p.u_b = p.exact;
  p.u0 = p.exact;
  return p;
}

CdProblem example2(double eps) {
  CdProblem p;
  p.name = "cd-example2";
  p.b = constant_vector_field({2.0, -1.0});
  p.eps = constant_field(eps);
  p.c = constant_field(1.0);
  p.exact = [](Point x, double t) { return t * t * std::cos(x.x * x.y * x.y); };
  p.g = [eps](Point x, double t) {
    const double s = x.x * x.y * x.y;
    const double cs = std::cos(s), sn = std::sin(s);
    const double u = t * t * cs;
    const double u_t = 2.0 * t * cs;
    const double u_x = -t * t * sn * x.y * x.y;
    const double u_y = -t * t * sn * 2.0 * x.x * x.y;
    const double y2 = x.y * x.y;
    const double lap = -t * t * (cs * (y2 * y2 + 4.0 * x.x * x.x * y2) + 2.0 * x.x * sn);
    return u_t + 2.0 * u_x - u_y - eps * lap + u;
  };
  p.u_b = p.exact;
  p.u0 = p.exact;
  return p;
}

CdProblem pure_diffusion() {
  constexpr double eps = 0.01;
  CdProblem p;
  p.name = "cd-pure-diffusion";
  p.b = zero_vector_field();
  p.eps = constant_field(eps);
  p.c = zero_field();
  p.exact = [](Point x, double t) {
    return std::exp(-2.0 * kTwoPi * kTwoPi * eps * t) * std::sin(kTwoPi * x.x) *
           std::sin(kTwoPi * x.y);
  };
  p.g = zero_field();
  p.u_b = p.exact;
  p.u0 = p.exact;
  return p;
}

CdProblem cd_zero() {
  CdProblem p;
  p.name = "cd-zero";
  p.b = constant_vector_field({1.0, -1.0});
  p.eps = constant_field(1e-8);
  p.c = constant_field(1.0);
  p.g = zero_field();
  p.u_b = zero_field();
  p.u0 = zero_field();
  p.exact = zero_field();
  return p;
}

// x^2 (x - 1)^2 and its derivative's half, x (x - 1)(2x - 1).
double poly_a(double x) { return x * x * (x - 1.0) * (x - 1.0); }
double poly_b(double x) { return x * (x - 1.0) * (2.0 * x - 1.0); }
double poly_b1(double x) { return 6.0 * x * x - 6.0 * x + 1.0; }
double poly_b2(double x) { return 12.0 * x - 6.0; }

NsProblem example3(double re) {
  NsProblem p;
  p.name = "ns-example3";
  p.reynolds = re;
  p.exact_velocity = [](Point x, double t) {
    const double c = 10.0 * std::cos(t);
    return Vec2{c * poly_a(x.x) * poly_b(x.y), -c * poly_b(x.x) * poly_a(x.y)};
  };
  p.exact_pressure = [](Point x, double t) { return (x.x * x.x - x.y * x.y) * std::cos(t); };
  p.g = [re](Point x, double t) {
    const double c = 10.0 * std::cos(t), s = -10.0 * std::sin(t);
    const double ax = poly_a(x.x), ay = poly_a(x.y);
    const double bx = poly_b(x.x), by = poly_b(x.y);
    const double b1x = poly_b1(x.x), b1y = poly_b1(x.y);
    const double u1 = c * ax * by, u2 = -c * bx * ay;
    const double u1_x = 2.0 * c * bx * by, u1_y = c * ax * b1y;
    const double u2_x = -c * b1x * ay, u2_y = -2.0 * c * bx * by;
    const double lap1 = c * (2.0 * b1x * by + ax * poly_b2(x.y));
    const double lap2 = -c * (poly_b2(x.x) * ay + 2.0 * bx * b1y);
    const double p_x = 2.0 * x.x * std::cos(t), p_y = -2.0 * x.y * std::cos(t);
    return Vec2{s * ax * by + u1 * u1_x + u2 * u1_y - lap1 / re + p_x,
                -s * bx * ay + u1 * u2_x + u2 * u2_y - lap2 / re + p_y};
  };
  p.u_b = p.exact_velocity;
  p.u0 = p.exact_velocity;
  return p;
}

NsProblem example4(double re) {
  NsProblem p;
  p.name = "ns-example4";
  p.reynolds = re;
  p.exact_velocity = [](Point x, double t) {
    return Vec2{t * t * t * x.y * x.y, t * t * x.x};
  };
  p.exact_pressure = [](Point x, double t) { return t * x.x + x.y - 0.5 * (t + 1.0); };
  p.g = [re](Point x, double t) {
    const double t2 = t * t, t3 = t2 * t, t5 = t3 * t2;
    return Vec2{3.0 * t2 * x.y * x.y + 2.0 * t5 * x.x * x.y - 2.0 * t3 / re + t,
                2.0 * t * x.x + t5 * x.y * x.y + 1.0};
  };
  p.u_b = p.exact_velocity;
  p.u0 = p.exact_velocity;
  return p;
}

NsProblem cavity(double re) {
  NsProblem p;
  p.name = "cavity";
  p.reynolds = re;
  p.g = zero_vector_field();
  p.u0 = zero_vector_field();
  p.u_b = [](Point x, double) {
    return x.y >= 1.0 - 1e-12 ? Vec2{1.0, 0.0} : Vec2{0.0, 0.0};
  };
  p.final_time = 1e6;
  return p;
}

NsProblem ns_zero(double re) {
  NsProblem p;
  p.name = "ns-zero";
  p.reynolds = re;
  p.g = zero_vector_field();
  p.u0 = zero_vector_field();
  p.u_b = zero_vector_field();
  p.exact_velocity = zero_vector_field();
  p.exact_pressure = zero_field();
  return p;
}

double reynolds_or(const ProblemId& id, double fallback) {
  if (id.reynolds < 0.0 || !std::isfinite(id.reynolds)) {
    throw InvalidArgument("Reynolds number must be positive and finite");
  }
  return id.reynolds > 0.0 ? id.reynolds : fallback;
}

template <class Exact, class Accumulate>
double l2_error_impl(const FeSpace& space, std::span<const double> coeffs, Accumulate&& sq) {
  if (static_cast<int>(coeffs.size()) != space.num_dofs()) {
    throw InvalidArgument("l2_error: coefficient vector does not match the space");
  }
  static const QuadratureRule rule = collapsed_gauss_rule(8);
  const int n = space.nodes_per_cell();
  std::vector<std::array<double, 6>> phi(rule.size());
  for (std::size_t q = 0; q < rule.size(); ++q) shape::values(space.degree(), rule.points[q], phi[q]);
  double total = 0.0;
  for (int tri = 0; tri < space.mesh().num_triangles(); ++tri) {
    const ElementGeometry geo = element_geometry(space.mesh(), tri);
    const auto nodes = space.cell_nodes(tri);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      std::array<double, 2> uh{0.0, 0.0};
      for (int c = 0; c < space.components(); ++c) {
        for (int a = 0; a < n; ++a) uh[c] += coeffs[space.dof(c, nodes[a])] * phi[q][a];
      }
      total += rule.weights[q] * 2.0 * geo.area * sq(geo.map(rule.points[q]), uh);
    }
  }
  return std::sqrt(total);
}

}  // namespace

bool ProblemId::is_navier_stokes() const {
  return kind == ProblemKind::NsExample3 || kind == ProblemKind::NsExample4 ||
         kind == ProblemKind::Cavity || kind == ProblemKind::NsZero;
}

std::string to_string(ProblemKind kind) {
  for (const auto& entry : kKindNames) {
    if (entry.kind == kind) return entry.name;
  }
  return "unknown";
}

ProblemKind parse_problem_kind(std::string_view name) {
  for (const auto& entry : kKindNames) {
    if (name == entry.name) return entry.kind;
  }
  std::ostringstream os;
  os << "unknown problem '" << name << "' (expected one of:";
  for (const auto& entry : kKindNames) os << ' ' << entry.name;
  os << ')';
  throw InvalidArgument(os.str());
}

CdProblem make_cd_problem(const ProblemId& id) {
  switch (id.kind) {
    case ProblemKind::CdExample1: return example1(1e-8);
    case ProblemKind::CdExample2: return example2(1e-8);
    case ProblemKind::CdZero: return cd_zero();
    case ProblemKind::CdPureDiffusion: return pure_diffusion();
    default: break;
  }
  throw InvalidArgument("make_cd_problem: '" + to_string(id.kind) + "' is a Navier-Stokes problem");
}

NsProblem make_ns_problem(const ProblemId& id) {
  switch (id.kind) {
    case ProblemKind::NsExample3: return example3(reynolds_or(id, 5000.0));
    case ProblemKind::NsExample4: return example4(reynolds_or(id, 5000.0));
    case ProblemKind::Cavity: return cavity(reynolds_or(id, 1000.0));
    case ProblemKind::NsZero: return ns_zero(reynolds_or(id, 100.0));
    default: break;
  }
  throw InvalidArgument("make_ns_problem: '" + to_string(id.kind) + "' is a scalar problem");
}

Problem make_problem(const ProblemId& id) {
  if (id.is_navier_stokes()) return make_ns_problem(id);
  return make_cd_problem(id);
}

CdProblem with_convection_source(CdProblem problem, bool in_convection_step) {
  const ScalarField f = problem.f, g = problem.g;
  ScalarField total;
  if (f && g) {
    total = [f, g](Point x, double t) { return f(x, t) + g(x, t); };
  } else {
    total = f ? f : g;
  }
  if (in_convection_step) {
    problem.f = total;
    problem.g = {};
  } else {
    problem.f = {};
    problem.g = total;
  }
  return problem;
}

CdProblem with_diffusion(const ProblemId& id, double eps) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) {
    throw CoefficientSignError("diffusion coefficient must be finite and non-negative");
  }
  switch (id.kind) {
    case ProblemKind::CdExample1: return example1(eps);
    case ProblemKind::CdExample2: return example2(eps);
    default: break;
  }
  throw InvalidArgument("with_diffusion: only cd-example1 and cd-example2 accept a custom eps");
}

double l2_error(const FeSpace& space, std::span<const double> coeffs, const ScalarField& exact,
                double t) {
  if (space.components() != 1) throw InvalidArgument("l2_error: scalar exact on vector space");
  return l2_error_impl<ScalarField>(space, coeffs, [&](Point x, const std::array<double, 2>& uh) {
    const double d = uh[0] - exact(x, t);
    return d * d;
  });
}

double l2_error(const FeSpace& space, std::span<const double> coeffs, const VectorField& exact,
                double t) {
  if (space.components() != 2) throw InvalidArgument("l2_error: vector exact on scalar space");
  return l2_error_impl<VectorField>(space, coeffs, [&](Point x, const std::array<double, 2>& uh) {
    const Vec2 u = exact(x, t);
    return (uh[0] - u.x) * (uh[0] - u.x) + (uh[1] - u.y) * (uh[1] - u.y);
  });
}

std::vector<double> convergence_order(std::span<const double> errors) {
  if (errors.size() < 2) throw InvalidArgument("convergence_order: need at least two errors");
  for (double e : errors) {
    if (!(e > 0.0) || !std::isfinite(e)) {
      std::ostringstream os;
      os << "convergence_order: error " << e << " is not positive";
      throw InvalidArgument(os.str());
    }
  }
  std::vector<double> orders;
  for (std::size_t k = 1; k < errors.size(); ++k) orders.push_back(std::log2(errors[k - 1] / errors[k]));
  return orders;
}

std::vector<double> convergence_order(std::span<const double> resolutions,
                                      std::span<const double> errors) {
  if (resolutions.size() != errors.size()) {
    throw InvalidArgument("convergence_order: resolutions and errors differ in length");
  }
  for (std::size_t k = 1; k < resolutions.size(); ++k) {
    if (std::abs(resolutions[k - 1] / resolutions[k] - 2.0) > 1e-9) {
      throw InvalidArgument("convergence_order: resolutions must halve between rows");
    }
  }
  return convergence_order(errors);
}

}  // namespace opsplit
