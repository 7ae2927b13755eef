#include "shapemg/physics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace shapemg {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("physics: " + msg); }

PcgResult solve_or_fail(const SparseOperator& a, const Eigen::VectorXd& b, const MgHierarchy& mg,
                        const SolverOptions& opts, const char* what) {
  PcgResult res = pcg(a, b, mg_preconditioner(mg), opts.rtol, opts.max_iterations);
  if (!res.converged) {
    std::ostringstream os;
    os << what << ": PCG did not reach rtol " << opts.rtol << " within " << opts.max_iterations
       << " iterations (relative residual " << res.rel_residual << ")";
    fail(os.str());
  }
  return res;
}

}  // namespace

MgHierarchy build_problem_mg(const SimplicialMeshHierarchy& h, const LevelAssembler& assemble,
                             int components, const SolverOptions& opts) {
  std::vector<LevelSystem> systems;
  systems.reserve(h.num_levels());
  for (const MeshLevel& level : h.levels) systems.push_back(assemble(level));
  return build_mg(std::move(systems), h.maps, components, opts.galerkin_coarse_operators,
                  opts.nu_pre, opts.nu_post);
}

BoundaryConditionSet elastic_bcs(int dim, const Eigen::VectorXd& f_top) {
  if (f_top.size() != dim) fail("f_top must be a d-vector");
  BoundaryConditionSet bcs;
  bcs.conditions[BoundaryLabel::bottom] =
      BoundaryCondition::dirichlet(Eigen::VectorXd::Zero(dim));
  bcs.conditions[BoundaryLabel::top] = BoundaryCondition::neumann(f_top);
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(dim);
  bcs.conditions[BoundaryLabel::left] = BoundaryCondition::neumann(zero);
  bcs.conditions[BoundaryLabel::right] = BoundaryCondition::neumann(zero);
  if (dim == 3) {
    bcs.conditions[BoundaryLabel::front] = BoundaryCondition::neumann(zero);
    bcs.conditions[BoundaryLabel::back] = BoundaryCondition::neumann(zero);
  }
  return bcs;
}

BoundaryConditionSet diffusion_bcs(int dim, double top_value) {
  BoundaryConditionSet bcs;
  bcs.conditions[BoundaryLabel::top] = BoundaryCondition::dirichlet(top_value);
  bcs.conditions[BoundaryLabel::bottom] = BoundaryCondition::neumann(0.0);
  bcs.conditions[BoundaryLabel::left] = BoundaryCondition::neumann(0.0);
  bcs.conditions[BoundaryLabel::right] = BoundaryCondition::neumann(0.0);
  if (dim == 3) {
    bcs.conditions[BoundaryLabel::front] = BoundaryCondition::neumann(0.0);
    bcs.conditions[BoundaryLabel::back] = BoundaryCondition::neumann(0.0);
  }
  return bcs;
}

Eigen::VectorXd solve_elastic_state(const SimplicialMeshHierarchy& h,
                                    const MaterialCoefficients& coeffs,
                                    const Eigen::VectorXd& f_top, const SolverOptions& opts) {
  const int d = h.dim();
  BoundaryConditionSet bcs = elastic_bcs(d, f_top);
  ElasticitySystem fine = assemble_elasticity(h.finest(), coeffs, bcs);
  if (f_top.isZero()) return Eigen::VectorXd::Zero(fine.raw.rows());
  MgHierarchy mg = build_problem_mg(
      h,
      [&](const MeshLevel& level) {
        ElasticitySystem sys = assemble_elasticity(level, coeffs, bcs);
        return LevelSystem{sys.raw, sys.bc};
      },
      d, opts);
  return solve_or_fail(fine.constrained, fine.load, mg, opts, "elastic state").x;
}

Eigen::VectorXd solve_elastic_adjoint(const SimplicialMeshHierarchy& h,
                                      const MaterialCoefficients& coeffs,
                                      const Eigen::VectorXd& f_top, double nu1,
                                      const SolverOptions& opts) {
  return solve_elastic_state(h, coeffs, Eigen::VectorXd(-nu1 * f_top), opts);
}

int step_count(double t_end, double dt) {
  if (dt <= 0.0 || t_end <= 0.0) fail("time horizon and step must be positive");
  double ratio = t_end / dt;
  int n = static_cast<int>(std::lround(ratio));
  if (n < 1 || std::abs(ratio - n) > 1e-9) fail("dt must divide T");
  return n;
}

TimeWeights TimeWeights::integral(int steps, double dt) {
  TimeWeights tw;
  tw.w.assign(steps + 1, dt);
  tw.w[0] = 0.0;
  return tw;
}

TimeWeights TimeWeights::instants(int steps) {
  if (steps % 2 != 0) fail("measurement instants T/2 and T need an even step count");
  TimeWeights tw;
  tw.w.assign(steps + 1, 0.0);
  tw.w[steps / 2] = 1.0;
  tw.w[steps] = 1.0;
  return tw;
}

namespace {

struct DiffusionMarchOperator {
  SparseOperator system_raw;  // M + dt K
  SparseOperator system_constrained;
  SparseOperator mass_raw;
  Constraints bc;
  MgHierarchy mg;
};

DiffusionMarchOperator build_march_operator(const SimplicialMeshHierarchy& h,
                                            const MaterialCoefficients& coeffs, double dt,
                                            const SolverOptions& opts) {
  BoundaryConditionSet bcs = diffusion_bcs(h.dim());
  DiffusionMarchOperator op;
  auto assemble = [&](const MeshLevel& level) {
    DiffusionSystem sys = assemble_diffusion(level, coeffs, bcs);
    LevelSystem out;
    out.raw.m = SpMat(sys.mass_raw.m + dt * sys.stiffness_raw.m);
    out.bc = sys.bc;
    return out;
  };
  op.mg = build_problem_mg(h, assemble, 1, opts);
  DiffusionSystem fine = assemble_diffusion(h.finest(), coeffs, bcs);
  op.system_raw.m = SpMat(fine.mass_raw.m + dt * fine.stiffness_raw.m);
  op.bc = fine.bc;
  op.system_constrained = eliminate_constraints(op.system_raw, op.bc);
  op.mass_raw = fine.mass_raw;
  return op;
}

}  // namespace

TransientTrajectory march_diffusion_state(const SimplicialMeshHierarchy& h,
                                          const MaterialCoefficients& coeffs, double dt,
                                          double t_end, const SolverOptions& opts) {
  const int steps = step_count(t_end, dt);
  DiffusionMarchOperator op = build_march_operator(h, coeffs, dt, opts);

  TransientTrajectory traj;
  traj.dt = dt;
  traj.fields.reserve(steps + 1);
  traj.fields.push_back(Eigen::VectorXd::Zero(h.finest().num_vertices()));
  for (int n = 0; n < steps; ++n) {
    Eigen::VectorXd rhs = op.mass_raw.m * traj.fields.back();
    rhs = constrain_rhs(op.system_raw, op.bc, rhs);
    PcgResult res = pcg(op.system_constrained, rhs, mg_preconditioner(op.mg), opts.rtol,
                        opts.max_iterations);
    if (!res.converged) {
      std::ostringstream os;
      os << "diffusion march failed at step " << n + 1 << " of " << steps
         << " (relative residual " << res.rel_residual << ")";
      fail(os.str());
    }
    traj.fields.push_back(std::move(res.x));
  }
  return traj;
}

TransientTrajectory march_diffusion_adjoint(const SimplicialMeshHierarchy& h,
                                            const MaterialCoefficients& coeffs,
                                            const TransientTrajectory& y,
                                            const std::vector<Eigen::VectorXd>& ybar,
                                            const TimeWeights& weights, double nu2,
                                            const SolverOptions& opts) {
  const int steps = y.num_steps();
  if (static_cast<int>(weights.w.size()) != steps + 1) fail("time weight count mismatch");
  if (static_cast<int>(ybar.size()) != steps + 1) fail("measurement trajectory length mismatch");

  const int n_dofs = h.finest().num_vertices();
  TransientTrajectory z;
  z.dt = y.dt;
  z.fields.assign(steps + 1, Eigen::VectorXd::Zero(n_dofs));
  if (nu2 == 0.0) return z;

  DiffusionMarchOperator op = build_march_operator(h, coeffs, y.dt, opts);
  // Adjoint Dirichlet values are homogeneous on the top boundary.
  Constraints adjoint_bc = op.bc;
  adjoint_bc.values.setZero();

  Eigen::VectorXd z_next = Eigen::VectorXd::Zero(n_dofs);  // z^{N+1} = 0
  for (int n = steps; n >= 1; --n) {
    Eigen::VectorXd rhs = op.mass_raw.m * z_next;
    if (weights.w[n] != 0.0) {
      if (ybar[n].size() != n_dofs) fail("measurement field size mismatch at a weighted step");
      rhs -= weights.w[n] * nu2 * (op.mass_raw.m * (y.fields[n] - ybar[n]));
    }
    rhs = constrain_rhs(op.system_raw, adjoint_bc, rhs);
    PcgResult res = pcg(op.system_constrained, rhs, mg_preconditioner(op.mg), opts.rtol,
                        opts.max_iterations);
    if (!res.converged) {
      std::ostringstream os;
      os << "adjoint march failed at step " << n << " (relative residual " << res.rel_residual
         << ")";
      fail(os.str());
    }
    z.fields[n] = res.x;
    z_next = z.fields[n];
  }
  return z;
}

}  // namespace shapemg
