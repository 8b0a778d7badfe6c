#pragma once

#include "crackfield/mesh.hpp"
#include "crackfield/solver.hpp"
#include "crackfield/stochastic.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace crackfield {

inline constexpr const char* kVersion = "crackfield 0.1.0";

/// Configuration error with the 1-based line number of the offending entry
/// (0 when no line applies).
struct ConfigError : std::runtime_error {
  ConfigError(int line_, const std::string& msg)
      : std::runtime_error(line_ > 0 ? "line " + std::to_string(line_) + ": " + msg
                                     : msg),
        line(line_) {}
  int line = 0;
};

enum class GeometryKind { Intact, SingleFlaw, TwoFlaws };

struct OutputSpec {
  std::string dir = "out";
  int snapshot_stride = 50;
};

/// Fully validated run description in SI units.
struct Scenario {
  GeometryKind geometry = GeometryKind::Intact;
  double width = 0.0;   // [m]
  double height = 0.0;  // [m]

  FlawSpec flaw;                 // single-flaw geometry
  FlawSpec flaw_a, flaw_b;       // two-flaw geometry
  char arrangement = 'A';
  double flaw_spacing = 0.0;     // center distance along the flaw axis [m]
  double flaw_offset = 0.0;      // perpendicular center offset [m]

  double target_h = 0.0;  // T3 target element size [m]
  int nx = 0, ny = 0;     // Q4 grid

  MaterialParams material;
  std::optional<StochasticFieldSpec> stochastic;  // n resolved at meshing
  LoadProgram program;
  SolverConfig solver;
  OutputSpec output;
};

/// Parses the line-oriented `key = value` format (# comments). Rejects
/// unknown keys; converts mm/GPa/kPa units to SI once.
Scenario parse_config(const std::string& text);
Scenario parse_config_file(const std::filesystem::path& path);

/// Canonical echo of a scenario in config syntax (12 significant digits);
/// parsing the echo reproduces the scenario.
std::string echo_config(const Scenario& s);

/// Builds the mesh for the scenario, attaching the stochastic modulus field
/// when configured.
Mesh build_scenario_mesh(const Scenario& s);

struct RunOptions {
  std::optional<std::string> out_dir;  // overrides scenario.output.dir
  int threads = 1;
  std::optional<std::string> resume;   // checkpoint path
};

/// Executes a scenario: curve.csv, field snapshots, mesh and metadata all
/// land in the output directory. Returns a process exit status (0 ok,
/// 3 solver failure).
int run_scenario(const Scenario& s, const RunOptions& opts);

struct RunMetrics {
  std::optional<double> peak_load;          // [N/m]
  double displacement_at_peak = 0.0;        // [m]
  std::optional<double> band_width_l0;      // mean phi>0.5 band width / l0
};

/// Post-processes a finished run directory.
RunMetrics extract_metrics(const std::filesystem::path& run_dir);

/// Writes `field <name> nodes N step S` followed by one value per node.
void write_field_snapshot(std::ostream& os, const std::string& name, int step,
                          const Eigen::VectorXd& values);

}  // namespace crackfield
