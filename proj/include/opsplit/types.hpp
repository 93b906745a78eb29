#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <vector>

namespace opsplit {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// Coefficient vector of a finite element function.
using Vector = std::vector<double>;

/// f(x, t) for scalar data.
using ScalarField = std::function<double(Point, double)>;
/// f(x, t) for vector data.
using VectorField = std::function<Vec2(Point, double)>;

inline ScalarField constant_field(double value) {
  return [value](Point, double) { return value; };
}

inline VectorField constant_vector_field(Vec2 value) {
  return [value](Point, double) { return value; };
}

}  // namespace opsplit
