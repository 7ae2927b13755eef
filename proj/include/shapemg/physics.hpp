#pragma once

#include "shapemg/multigrid.hpp"

namespace shapemg {

struct SolverOptions {
  double rtol = 1e-10;
  int max_iterations = 500;
  int nu_pre = 2;
  int nu_post = 2;
  bool galerkin_coarse_operators = true;
};

/// Assembly callback evaluated on every level of the hierarchy.
using LevelAssembler = std::function<LevelSystem(const MeshLevel&)>;

/// Multigrid hierarchy for one problem kind over all mesh levels.
MgHierarchy build_problem_mg(const SimplicialMeshHierarchy& h, const LevelAssembler& assemble,
                             int components, const SolverOptions& opts);

/// Boundary conditions of the elasticity model: bottom clamped, traction
/// f_top on top, traction-free sides.
BoundaryConditionSet elastic_bcs(int dim, const Eigen::VectorXd& f_top);

/// Boundary conditions of the diffusion model: y = `top_value` on top,
/// homogeneous natural flux elsewhere.
BoundaryConditionSet diffusion_bcs(int dim, double top_value = 1.0);

/// Displacement under the top traction with the bottom clamped, solved with
/// multigrid-preconditioned CG on the finest level.
Eigen::VectorXd solve_elastic_state(const SimplicialMeshHierarchy& h,
                                    const MaterialCoefficients& coeffs,
                                    const Eigen::VectorXd& f_top, const SolverOptions& opts);

/// Adjoint displacement: same operator, traction -nu1 * f, so w = -nu1 * u
/// holds at the discrete level.
Eigen::VectorXd solve_elastic_adjoint(const SimplicialMeshHierarchy& h,
                                      const MaterialCoefficients& coeffs,
                                      const Eigen::VectorXd& f_top, double nu1,
                                      const SolverOptions& opts);

/// Nodal fields at uniform times 0 = t_0 < ... < t_N = T.
struct TransientTrajectory {
  double dt = 0.0;
  std::vector<Eigen::VectorXd> fields;

  int num_steps() const { return static_cast<int>(fields.size()) - 1; }
  double horizon() const { return dt * num_steps(); }
};

/// Number of steps N with N*dt == T; rejects non-divisible horizons.
int step_count(double t_end, double dt);

/// Per-step weights w_n (n = 0..N; w_0 always 0) of the discrete tracking
/// term sum_n w_n * (nu2/2) |y^n - ybar^n|_M^2. Integral mode uses the
/// right-endpoint rectangle rule w_n = dt; instants mode puts unit weights
/// at T/2 and T only.
struct TimeWeights {
  std::vector<double> w;
  static TimeWeights integral(int steps, double dt);
  static TimeWeights instants(int steps);  // requires even step count
};

/// Backward-Euler march of the diffusion model from y = 0 with y = 1 on the
/// top boundary: (M + dt K) y^{n+1} = M y^n, Dirichlet values substituted.
TransientTrajectory march_diffusion_state(const SimplicialMeshHierarchy& h,
                                          const MaterialCoefficients& coeffs, double dt,
                                          double t_end, const SolverOptions& opts);

/// Discretely adjoint-consistent backward march of
/// (M + dt K) z^n = M z^{n+1} - w_n nu2 M (y^n - ybar^n), z^{N+1} = 0, with
/// z = 0 on the top boundary. ybar entries are consumed only where w_n > 0.
TransientTrajectory march_diffusion_adjoint(const SimplicialMeshHierarchy& h,
                                            const MaterialCoefficients& coeffs,
                                            const TransientTrajectory& y,
                                            const std::vector<Eigen::VectorXd>& ybar,
                                            const TimeWeights& weights, double nu2,
                                            const SolverOptions& opts);

}  // namespace shapemg
