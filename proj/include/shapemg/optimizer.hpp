#pragma once

#include "shapemg/measurements.hpp"
#include "shapemg/steklov.hpp"

namespace shapemg {

enum class OptimizerMode { gradient_descent, lbfgs };

/// Perimeter-weight schedule: nu4 starts at the objective's value and is set
/// to `nu4_after` once `switch_after` steps are accepted (never, when < 0).
struct RegularizationSchedule {
  int switch_after = -1;
  double nu4_after = 0.0;
};

struct OptimizerSettings {
  OptimizerMode mode = OptimizerMode::lbfgs;
  int memory = 5;
  int max_iterations = 50;
  double gs_tol_abs = 0.0;
  double gs_tol_rel = 0.0;        // relative to the first iterate's norm
  double armijo_c1 = 1e-4;
  double safeguard_gamma = 0.3;   // max displacement vs local min edge
  double safeguard_beta = 0.5;
  double safeguard_cap = 1.0;
  int max_backtracks = 30;
  double metric_lambda = 0.01;
  double metric_mu = 0.1;
  bool perimeter_surface_form = true;  // (sd_j4) by default, volume variant otherwise
  bool nu4_scale_with_h = false;       // nu4 * (h_finest / h_coarsest)
  RegularizationSchedule schedule;
};

/// The problem one optimization run owns: materials, objective, measurement
/// data and solver settings.
struct ShapeProblem {
  MaterialCoefficients coeffs;
  ObjectiveSpec objective;
  MeasurementHandle measurements;
  SolverOptions solver;
};

struct HistoryRow {
  int iter = 0;
  double total = 0.0, j1 = 0.0, j2 = 0.0, j3 = 0.0, j4 = 0.0;
  double gs_norm = 0.0;
  double nu4 = 0.0;
  double step_scale = 0.0;
};

enum class StopReason { converged, max_iterations, mesh_validity_failure };

const char* to_string(StopReason reason);

struct OptimizeOutcome {
  SimplicialMeshHierarchy hierarchy;
  std::vector<HistoryRow> history;
  StopReason reason = StopReason::max_iterations;
  int accepted_steps = 0;
};

/// Everything computed at one geometry: states, adjoints, objective value and
/// the combined shape-derivative load.
struct IterationData {
  ObjectiveValue objective;
  ShapeDerivativeLoad load;
  DeformationField gradient;  // deformation-equation solution U
};

/// One optimization run: evaluate measurements, solve states and adjoints,
/// assemble and solve the deformation equation, apply the safeguarded step,
/// repeat. Quasi-Newton inner products all live in the Steklov-Poincare
/// metric of the current shape.
class ShapeOptimizer {
 public:
  ShapeOptimizer(ShapeProblem problem, OptimizerSettings settings);

  /// Largest scale s0 * beta^k whose displacement stays under
  /// gamma * (local min incident edge length) per vertex and keeps every
  /// finest-level simplex positively oriented.
  static double safeguard_scale(const MeshLevel& level, const Eigen::VectorXd& direction,
                                double gamma, double beta, double cap, int max_backtracks);

  /// Active nu4 accounting for the h-scaling flag and the schedule.
  double active_nu4(const SimplicialMeshHierarchy& h, int accepted_steps) const;

  /// States, loads and the deformation field at one geometry.
  IterationData evaluate(const SimplicialMeshHierarchy& h, const SteklovMetric& metric,
                         double nu4) const;

  /// Objective value only (used by the line search).
  ObjectiveValue evaluate_objective_only(const SimplicialMeshHierarchy& h, double nu4) const;

  OptimizeOutcome run(const SimplicialMeshHierarchy& initial,
                      const std::function<void(int, const SimplicialMeshHierarchy&,
                                               const HistoryRow&)>& on_accept = {}) const;

  const OptimizerSettings& settings() const { return settings_; }

 private:
  ShapeProblem problem_;
  OptimizerSettings settings_;
};

/// "iter,J,j1,j2,j3,j4,gs_norm,nu4,step_scale" rows at full precision.
void write_history_csv(const std::vector<HistoryRow>& history, const std::string& path);

}  // namespace shapemg
