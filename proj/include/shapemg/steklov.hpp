#pragma once

#include "shapemg/shape_calculus.hpp"

namespace shapemg {

/// Gradient representation in the Steklov-Poincare metric: the deformation
/// field solving a(U,V) = b(V) with its cached energy a(U,U) = b(U).
struct DeformationField {
  Eigen::VectorXd u;
  double energy = 0.0;

  double gs_norm() const { return std::sqrt(std::max(0.0, energy)); }
};

/// The metric's bilinear form: linear elasticity with its own fixed Lame pair
/// (default lambda = 0.01, mu = 0.1, uniform over both subdomains) and
/// sliding conditions on every outer face. Holds the assembled operator and
/// its multigrid hierarchy for one geometry; rebuild after the mesh moves.
class SteklovMetric {
 public:
  SteklovMetric(const SimplicialMeshHierarchy& h, double lambda, double mu,
                const SolverOptions& opts);

  /// MG-PCG solve of a(U,V) = sum_l b_l(V) on the free dofs.
  DeformationField solve(const std::vector<ShapeDerivativeLoad>& loads) const;
  DeformationField solve(const Eigen::VectorXd& load) const;

  /// a(u1, u2); the quasi-Newton recursion uses this, never the Euclidean dot.
  double gs_inner(const Eigen::VectorXd& u1, const Eigen::VectorXd& u2) const;
  double gs_norm(const Eigen::VectorXd& u) const;

  const std::vector<char>& constrained_dofs() const { return constrained_; }
  const SparseOperator& op() const { return constrained_op_; }
  /// Restriction of shape loads for this metric (interface support plus the
  /// sliding constraints).
  LoadRestriction load_restriction(const MeshLevel& level) const;

 private:
  SparseOperator constrained_op_;
  std::vector<char> constrained_;
  MgHierarchy mg_;
  SolverOptions opts_;
};

}  // namespace shapemg
