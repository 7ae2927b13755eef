#pragma once

#include "shapemg/generators.hpp"
#include "shapemg/optimizer.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace shapemg {

/// Thrown on malformed or inconsistent configuration (CLI exit code 1).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Inclusion description for the built-in generators.
struct InclusionSpec {
  enum class Kind { none, circle, offset_circle, star, rough, cells };
  Kind kind = Kind::none;
  double radius = 0.25;
  Eigen::Vector2d offset{0.0, 0.0};
  std::vector<double> amplitudes;
  std::vector<int> lobes;
  double rough_amplitude = 0.05;
  unsigned seed = 1;
  IndexBox cells;  // structured meshes
};

struct GeometryConfig {
  enum class Kind { ogrid, structured, structured3d };
  Kind kind = Kind::ogrid;
  Eigen::VectorXd box_lo, box_hi;
  int levels = 2;
  int directions = 32;
  int rings_in = 3;
  int rings_out = 4;
  Eigen::VectorXi cells;  // structured cell counts per axis
  InclusionSpec inclusion;
  bool snap_circle = false;  // project new interface vertices onto the circle
};

struct MeasurementConfig {
  enum class Source { none, nodal_self, synthesize, rbf_files };
  Source source = Source::none;
  InclusionSpec target_inclusion;  // for synthesize
  int centers_per_axis = 16;
  double ridge = 1e-10;
  double epsilon = 0.0;
  std::vector<std::string> rbf_files;
};

struct GradientCheckConfig {
  std::vector<std::string> components;  // subset of j1 j2 j3 j4
  std::vector<double> t_values{1e-2, 1e-3, 1e-4};
  int fields = 5;
  unsigned seed = 1;
  double min_order = 0.9;
  std::string field_kind = "random";    // random | smooth
  std::string corrupt = "";             // test hook: scales one assembly by 1.1
};

struct StudyConfig {
  int levels = 5;                  // curvature study
  std::string problem = "poisson"; // mg bench: poisson | diffusion | elasticity
  int min_level = 3;
  int max_level = 6;
};

struct ScenarioConfig {
  GeometryConfig geometry;
  MaterialCoefficients coefficients;
  ObjectiveSpec objective;
  MeasurementConfig measurements;
  OptimizerSettings optimizer;
  SolverOptions solver;
  GradientCheckConfig gradient_check;
  StudyConfig study;
  std::string output_dir = "out";
  bool write_vtk = false;
};

/// Parse and fully validate the flat key-value scenario format (sections in
/// brackets, "key = value..." lines, '#' comments). Unknown sections or keys
/// are rejected.
ScenarioConfig parse_scenario(std::istream& in);
ScenarioConfig parse_scenario_file(const std::string& path);

/// Instantiate the configured hierarchy.
SimplicialMeshHierarchy build_geometry(const GeometryConfig& geometry);

/// Assemble the full problem, synthesizing or loading measurement data.
ShapeProblem build_problem(const ScenarioConfig& config);

/// Experiment drivers behind the CLI subcommands. Each returns the process
/// exit code contract: 0 success, 2 numerical failure (validation failures
/// throw ConfigError before any compute).
int run_check_gradient(const ScenarioConfig& config, std::ostream& out);
int run_optimize(const ScenarioConfig& config, std::ostream& out);
int run_curvature_study(const ScenarioConfig& config, std::ostream& out);
int run_mg_bench(const ScenarioConfig& config, std::ostream& out);

}  // namespace shapemg
