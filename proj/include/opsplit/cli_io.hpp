#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "opsplit/fe_space.hpp"
#include "opsplit/harness.hpp"
#include "json.hpp"

namespace opsplit {

enum class Command { Run, Converge, CriticalDt, Cavity };

std::string to_string(Command command);
Command parse_command(std::string_view name);

struct RunConfig {
  Command command = Command::Run;
  std::optional<ProblemKind> problem;
  int n = 0;
  /// 0 selects the problem default.
  double final_time = 0.0;
  std::optional<int> steps;
  std::optional<double> dt;
  int m = 1;
  /// 0 selects the problem default.
  double reynolds = 0.0;
  bool lumped_mass = false;
  double rel_tol = 1e-10;
  std::optional<double> eps;
  std::string output_dir = "out";
  bool emit_vtk = false;
  bool emit_csv = true;
  bool emit_summary = true;

  /// converge
  std::string axis = "h";
  std::vector<double> ladder;
  /// critical-dt
  double dt_seed = 0.0;
  /// cavity
  double steady_tolerance = 1e-5;
  int max_steps = 100000;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Throws ConfigError naming the offending or missing keys.
void validate(const RunConfig& config);

/// Strict: unknown keys are rejected by name.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

/// SHA-1 of the canonical JSON, hashed as a git blob.
std::string config_hash(const RunConfig& config);

/// Scalar value in the "6.02478(-4)" style used by the reference tables.
std::string short_format(double value);

/// Writes via a temporary file in the same directory and a rename.
void atomic_write(const std::filesystem::path& path, const std::string& content);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::string str() const;
};

std::string csv_number(double value);

/// Legacy ASCII VTK of the mesh vertices with point data sampled at the
/// vertices (P2 fields are restricted to their vertex values).
struct VtkField {
  std::string name;
  const FeSpace* space = nullptr;
  std::span<const double> coeffs;
};
std::string vtk_legacy(const TriangleMesh& mesh, const std::vector<VtkField>& fields,
                       const std::string& title = "opsplit");

/// Thread count from OPSPLIT_THREADS (default 1).
int thread_count_from_env();

enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitDiverged = 2 };

/// Runs the configured driver and writes artifacts under output_dir.
/// Returns the process exit status.
int run_command(const RunConfig& config, std::ostream& log);

}  // namespace opsplit
