#pragma once

#include <string>

#include "tidalopt/optimize.hpp"
#include "tidalopt/verify.hpp"

namespace tidalopt {

/// Thrown for configuration / file-format problems (exit code 1 territory,
/// as opposed to solver failures).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BathymetryConfig {
  std::string preset = "constant";  // constant | slope | bump
  double depth = 1.0;               // base depth d (d0 for slope/bump)
  double sx = 0.0, sy = 0.0;        // slope: d0 + sx*x + sy*y
  double amplitude = 0.0;           // bump: d0 + amp*exp(-((x-cx)^2+(y-cy)^2)/width^2)
  double width = 0.25;
};

struct AmbientFlowConfig {
  std::string preset = "zero";  // zero | uniform | file
  double c1 = 0.0, c2 = 0.0;
  std::string path;             // rank-2 field file, held constant in time
};

struct ForcingConfig {
  std::string preset = "zero";  // zero | assembled | file
  double tide_c1 = 0.0, tide_c2 = 0.0;  // assembled: steady sine-bump tide force
  std::string manifest;         // file: trajectory manifest of forcing snapshots
};

struct CostConfig {
  std::string kind = "tracking";  // tracking | dissipation | assimilation | general
  std::string targets = "zero";   // zero | free-run (nested uncontrolled solve)
};

struct ScenarioConfig {
  int nx = 32, ny = 32;
  double lx = 1.0, ly = 1.0;
  double t_final = 0.5;
  int steps = 64;
  PhysicalParams params;
  BathymetryConfig bathymetry;
  AmbientFlowConfig w0;
  ForcingConfig forcing;
  CostConfig cost;
  OptimizeSettings optimizer;
  JacobianMode mode = JacobianMode::exact;
  unsigned seed = 0;
  std::string output = "out";
};

/// Strict JSON loader: unknown keys rejected, all values validated (positive
/// depth everywhere, alpha > 0, dt within the CFL bound, referenced files
/// present) before anything runs. Throws ConfigError.
ScenarioConfig parse_config(const std::string& path);
ScenarioConfig parse_config_text(const std::string& text);

/// Built scenario pieces.
GridSpec build_grid(const ScenarioConfig& cfg);
TimeGrid build_time(const ScenarioConfig& cfg);
Bathymetry build_bathymetry(const ScenarioConfig& cfg);
BoundaryFlow build_w0(const ScenarioConfig& cfg);
ForcingTrajectory build_forcing(const ScenarioConfig& cfg,
                                const Bathymetry& bathy,
                                const BoundaryFlow& w0);
ModelBundle build_bundle(const ScenarioConfig& cfg);
CostSpec build_cost(const ScenarioConfig& cfg, const ModelBundle& bundle);

/// Binary field files: magic "TDF1", then rank, nx, ny as unsigned 32-bit
/// little-endian, then rank*nx*ny doubles (little-endian), row-major,
/// component-major for rank 2. Round trips are bit exact.
void write_field(const std::string& path, const ScalarField& f);
void write_field(const std::string& path, const VectorField& f);
ScalarField read_scalar_field(const std::string& path);
VectorField read_vector_field(const std::string& path);

/// Trajectory storage: one file per snapshot plus manifest.json listing
/// times and file names.
void write_trajectory(const std::string& dir, const StateTrajectory& traj);
StateTrajectory read_trajectory(const std::string& dir);
std::vector<VectorField> read_vector_series(const std::string& dir);

/// CSV convenience export: one grid row per line; for vector fields the
/// second component block follows the first.
void write_csv(const std::string& path, const ScalarField& f);
void write_csv(const std::string& path, const VectorField& f);

struct CliOverrides {
  bool has_seed = false;
  unsigned seed = 0;
  bool has_mode = false;
  JacobianMode mode = JacobianMode::exact;
  std::vector<double> tau_seq;
  int theta_samples = 0;
  int max_iters = -1;
  double tol = -1.0;
};

/// Executes one subcommand pipeline; writes artifacts under cfg.output and
/// prints a one-line summary with the headline number. Returns the process
/// exit code: 0 ok, 1 validation, 2 solver failure, 3 property failure.
int run_scenario(const std::string& subcommand, ScenarioConfig cfg,
                 const CliOverrides& overrides = {});

}  // namespace tidalopt
