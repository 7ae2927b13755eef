#include "shapemg/steklov.hpp"

#include <stdexcept>

namespace shapemg {

SteklovMetric::SteklovMetric(const SimplicialMeshHierarchy& h, double lambda, double mu,
                             const SolverOptions& opts)
    : opts_(opts) {
  MaterialCoefficients metric_coeffs;
  metric_coeffs.lambda_out = metric_coeffs.lambda_int = lambda;
  metric_coeffs.mu_out = metric_coeffs.mu_int = mu;
  BoundaryConditionSet bcs = all_sliding_bcs(h.dim());
  auto assemble = [&](const MeshLevel& level) {
    ElasticitySystem sys = assemble_elasticity(level, metric_coeffs, bcs);
    return LevelSystem{sys.raw, sys.bc};
  };
  mg_ = build_problem_mg(h, assemble, h.dim(), opts);
  constrained_op_ = mg_.finest_op();
  constrained_ = mg_.levels.back().constrained;
}

DeformationField SteklovMetric::solve(const Eigen::VectorXd& load) const {
  DeformationField field;
  if (load.size() != constrained_op_.rows())
    throw std::runtime_error("steklov: load size does not match the metric operator");
  Eigen::VectorXd rhs = load;
  for (size_t i = 0; i < constrained_.size(); ++i)
    if (constrained_[i]) rhs[i] = 0.0;
  if (rhs.norm() == 0.0) {
    field.u = Eigen::VectorXd::Zero(load.size());
    field.energy = 0.0;
    return field;
  }
  PcgResult res = pcg(constrained_op_, rhs, mg_preconditioner(mg_), opts_.rtol,
                      opts_.max_iterations);
  if (!res.converged)
    throw std::runtime_error("steklov: deformation solve did not converge (relative residual " +
                             std::to_string(res.rel_residual) + ")");
  field.u = std::move(res.x);
  field.energy = rhs.dot(field.u);  // a(U,U) = b(U) at the Galerkin solution
  return field;
}

DeformationField SteklovMetric::solve(const std::vector<ShapeDerivativeLoad>& loads) const {
  return solve(combine_loads(loads).b);
}

double SteklovMetric::gs_inner(const Eigen::VectorXd& u1, const Eigen::VectorXd& u2) const {
  return u1.dot(constrained_op_.m * u2);
}

double SteklovMetric::gs_norm(const Eigen::VectorXd& u) const {
  return std::sqrt(std::max(0.0, gs_inner(u, u)));
}

LoadRestriction SteklovMetric::load_restriction(const MeshLevel& level) const {
  return LoadRestriction::interface_support(level, constrained_);
}

}  // namespace shapemg
