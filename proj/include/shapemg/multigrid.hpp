#pragma once

#include "shapemg/fem.hpp"

#include <Eigen/Cholesky>

#include <functional>

namespace shapemg {

/// Per-level data of a geometric multigrid hierarchy. Operators are the
/// constraint-eliminated matrices; prolongations have rows of constrained
/// fine dofs and columns of constrained coarse dofs zeroed so corrections
/// stay in the homogeneous space.
struct MgLevel {
  SparseOperator op;        // constrained operator on this level
  SpMat prolongation;       // from the next-coarser level (empty on level 0)
  std::vector<char> constrained;
};

struct MgHierarchy {
  std::vector<MgLevel> levels;  // coarse -> fine
  Eigen::LLT<Eigen::MatrixXd> coarse_factorization;
  int nu_pre = 2;   // symmetric Gauss-Seidel sweeps before coarse correction
  int nu_post = 2;  // and after

  int num_levels() const { return static_cast<int>(levels.size()); }
  const SparseOperator& finest_op() const { return levels.back().op; }
};

/// Per-level assembly result consumed by build_mg.
struct LevelSystem {
  SparseOperator raw;
  Constraints bc;
};

/// Build the multigrid hierarchy from per-level raw operators and transfer
/// maps. With `galerkin` the coarse operators are P^T A P of the eliminated
/// fine operator (diagonal restored on constrained dofs); otherwise each
/// level keeps its own eliminated assembly. Restriction is always the
/// transpose of prolongation. The coarsest operator is factorized densely;
/// a singular factorization is rejected with a null-space diagnostic.
MgHierarchy build_mg(std::vector<LevelSystem> systems, const std::vector<RefinementMap>& maps,
                     int components, bool galerkin = true, int nu_pre = 2, int nu_post = 2);

/// One V(nu_pre, nu_post) cycle with symmetric Gauss-Seidel smoothing and an
/// exact coarse solve, applied to `rhs` from a zero initial guess. As a map
/// rhs -> result this is symmetric positive definite, as PCG requires.
Eigen::VectorXd v_cycle(const MgHierarchy& h, const Eigen::VectorXd& rhs);

/// One forward+backward Gauss-Seidel pass over the fixed dof order.
void symmetric_gauss_seidel(const SparseOperator& a, const Eigen::VectorXd& rhs, Eigen::VectorXd& x,
                            int sweeps);

using Preconditioner = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

Preconditioner identity_preconditioner();
Preconditioner jacobi_preconditioner(const SparseOperator& a);
Preconditioner mg_preconditioner(const MgHierarchy& h);

struct PcgResult {
  Eigen::VectorXd x;
  int iterations = 0;
  bool converged = false;
  double rel_residual = 0.0;  // preconditioned-residual norm ratio
};

/// Preconditioned conjugate gradients to a relative preconditioned-residual
/// tolerance. Throws on curvature breakdown (non-SPD operator or
/// preconditioner).
PcgResult pcg(const SparseOperator& a, const Eigen::VectorXd& b, const Preconditioner& precond,
              double rtol, int maxit);

}  // namespace shapemg
