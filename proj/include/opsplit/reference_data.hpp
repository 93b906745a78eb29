#pragma once

#include <optional>
#include <string>
#include <vector>

namespace opsplit {

/// Ghia, Ghia & Shin (1982), J. Comput. Phys. 48, 387-411: 129x129 multigrid
/// vorticity-streamfunction solutions of the lid-driven cavity.
/// Fixture version 1. Centerline values from Tables I and II of that
/// article; vortex data for Re = 1000 and 3200 from its Table V.
struct GhiaVortex {
  std::string name;
  double psi;
  double x;
  double y;
};

struct GhiaData {
  int version = 1;
  double reynolds = 0.0;
  /// u_x along x = 0.5.
  std::vector<double> y;
  std::vector<double> u;
  /// u_y along y = 0.5.
  std::vector<double> x;
  std::vector<double> v;
  std::vector<GhiaVortex> vortices;
};

/// Available for Re = 100 (profiles only), 1000 and 3200 (vortices only).
std::optional<GhiaData> ghia_data(double reynolds);

}  // namespace opsplit
