#pragma once

#include "shapemg/mesh.hpp"

#include <Eigen/Sparse>

#include <map>

namespace shapemg {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Piecewise-constant material data selected per element by subdomain label.
struct MaterialCoefficients {
  double k_out = 1.0;
  double k_int = 1.0;
  double lambda_out = 0.01;
  double lambda_int = 0.01;
  double mu_out = 0.1;
  double mu_int = 0.1;

  double k(int subdomain) const { return subdomain == 0 ? k_out : k_int; }
  double lambda(int subdomain) const { return subdomain == 0 ? lambda_out : lambda_int; }
  double mu(int subdomain) const { return subdomain == 0 ? mu_out : mu_int; }

  void validate(int dim) const;  // mu > 0, k > 0, lambda + 2 mu/d > 0
};

/// Symmetric sparse operator in compressed-row storage.
struct SparseOperator {
  SpMat m;

  int rows() const { return static_cast<int>(m.rows()); }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return m * x; }
  /// max |A - A^T| entry.
  double symmetry_error() const;
};

enum class BcKind { dirichlet, neumann, sliding_normal };

struct BoundaryCondition {
  BcKind kind = BcKind::neumann;
  Eigen::VectorXd value;  // Dirichlet value or Neumann flux/traction density

  static BoundaryCondition dirichlet(const Eigen::VectorXd& v) { return {BcKind::dirichlet, v}; }
  static BoundaryCondition dirichlet(double v) { return {BcKind::dirichlet, Eigen::VectorXd::Constant(1, v)}; }
  static BoundaryCondition neumann(const Eigen::VectorXd& v) { return {BcKind::neumann, v}; }
  static BoundaryCondition neumann(double v) { return {BcKind::neumann, Eigen::VectorXd::Constant(1, v)}; }
  static BoundaryCondition sliding() { return {BcKind::sliding_normal, {}}; }
};

/// One condition per boundary label occurring in the mesh.
struct BoundaryConditionSet {
  std::map<BoundaryLabel, BoundaryCondition> conditions;

  const BoundaryCondition& at(BoundaryLabel label) const;
  bool has(BoundaryLabel label) const { return conditions.count(label) > 0; }
};

/// Constrained degrees of freedom with their prescribed values.
struct Constraints {
  int n = 0;                 // total dof count
  std::vector<int> dofs;     // sorted, unique
  Eigen::VectorXd values;    // aligned with dofs

  std::vector<char> mask() const;  // 1 where constrained
  bool empty() const { return dofs.empty(); }
};

/// Symmetric row/column elimination: substitutes prescribed values into the
/// load, zeroes constrained rows and columns and puts 1 on their diagonal.
/// The result is SPD on the free dofs whenever the input is SPD on them.
SparseOperator eliminate_constraints(const SparseOperator& raw, const Constraints& c);

/// Substitution of constraint values into a right-hand side for the
/// eliminated operator: rhs_free -= A_raw(free, constrained) * values,
/// rhs_constrained = values.
Eigen::VectorXd constrain_rhs(const SparseOperator& raw, const Constraints& c,
                              const Eigen::VectorXd& rhs);

struct ElasticitySystem {
  SparseOperator raw;          // before elimination
  SparseOperator constrained;  // after elimination
  Eigen::VectorXd load;        // tractions + Dirichlet substitution
  Constraints bc;
};

/// P1 elasticity stiffness for int sigma(u):eps(v) dx with element-wise Lame
/// parameters, Neumann tractions integrated on labeled facets, Dirichlet and
/// sliding conditions eliminated. Every boundary label present in the mesh
/// must have a condition.
ElasticitySystem assemble_elasticity(const MeshLevel& level, const MaterialCoefficients& coeffs,
                                     const BoundaryConditionSet& bcs);

struct DiffusionSystem {
  SparseOperator stiffness_raw;
  SparseOperator mass_raw;  // consistent (unlumped) P1 mass
  Eigen::VectorXd load;     // natural flux terms (zero for the model problems)
  Constraints bc;
};

/// P1 diffusion stiffness int k grad y . grad z dx with jumping k, plus the
/// consistent mass matrix. Dirichlet labels are collected into `bc` (the
/// caller eliminates on whatever combination of mass/stiffness it solves);
/// Neumann data is integrated into `load`.
DiffusionSystem assemble_diffusion(const MeshLevel& level, const MaterialCoefficients& coeffs,
                                   const BoundaryConditionSet& bcs);

/// Sliding constraints only: on each outer face the displacement component
/// along the face normal axis is fixed to zero. Rejects non-axis-aligned
/// outer facets.
Constraints sliding_constraints(const MeshLevel& level);

/// Boundary conditions of the deformation metric: sliding on every face.
BoundaryConditionSet all_sliding_bcs(int dim);

/// Gradients of the P1 barycentric basis on element e, one column per local
/// vertex (d x (d+1)), plus the element volume.
void element_basis_gradients(const MeshLevel& level, int e, Eigen::MatrixXd& grads, double& volume);

/// Element mass matrix |T| (1 + delta_ij) / ((d+1)(d+2)).
Eigen::MatrixXd element_mass_matrix(const MeshLevel& level, int e);

/// Prolongation (coarse -> fine interpolation) for nested P1 spaces with
/// `components` interleaved scalar components per vertex: copied vertices get
/// weight 1, edge midpoints 1/2 from both parents.
SpMat p1_prolongation(const RefinementMap& map, int components);

}  // namespace shapemg
