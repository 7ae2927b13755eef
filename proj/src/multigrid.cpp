#include "shapemg/multigrid.hpp"

#include <cmath>
#include <stdexcept>

namespace shapemg {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("multigrid: " + msg); }

// Zero rows at constrained fine dofs and columns at constrained coarse dofs.
SpMat masked_prolongation(const SpMat& p, const std::vector<char>& fine_constrained,
                          const std::vector<char>& coarse_constrained) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(p.nonZeros());
  for (int k = 0; k < p.outerSize(); ++k)
    for (SpMat::InnerIterator it(p, k); it; ++it)
      if (!fine_constrained[it.row()] && !coarse_constrained[it.col()])
        trips.emplace_back(it.row(), it.col(), it.value());
  SpMat out(p.rows(), p.cols());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

SparseOperator galerkin_coarse(const SparseOperator& fine, const SpMat& p,
                               const std::vector<char>& coarse_constrained) {
  SpMat coarse = SpMat(p.transpose() * fine.m * p);
  // Restore unit diagonal on constrained dofs (their rows/columns were
  // dropped by the masked prolongation).
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(coarse.nonZeros() + coarse_constrained.size());
  for (int k = 0; k < coarse.outerSize(); ++k)
    for (SpMat::InnerIterator it(coarse, k); it; ++it)
      trips.emplace_back(it.row(), it.col(), it.value());
  for (size_t d = 0; d < coarse_constrained.size(); ++d)
    if (coarse_constrained[d]) trips.emplace_back(static_cast<int>(d), static_cast<int>(d), 1.0);
  SparseOperator out;
  out.m.resize(coarse.rows(), coarse.cols());
  out.m.setFromTriplets(trips.begin(), trips.end());
  return out;
}

}  // namespace

MgHierarchy build_mg(std::vector<LevelSystem> systems, const std::vector<RefinementMap>& maps,
                     int components, bool galerkin, int nu_pre, int nu_post) {
  const int nl = static_cast<int>(systems.size());
  if (nl < 1) fail("hierarchy needs at least one level");
  if (static_cast<int>(maps.size()) != nl - 1) fail("refinement map count mismatch");

  MgHierarchy h;
  h.nu_pre = nu_pre;
  h.nu_post = nu_post;
  h.levels.resize(nl);
  for (int l = 0; l < nl; ++l) h.levels[l].constrained = systems[l].bc.mask();

  h.levels[nl - 1].op = eliminate_constraints(systems[nl - 1].raw, systems[nl - 1].bc);
  for (int l = nl - 2; l >= 0; --l) {
    SpMat p = p1_prolongation(maps[l], components);
    if (p.rows() != systems[l + 1].raw.rows() || p.cols() != systems[l].raw.rows())
      fail("prolongation dimensions do not match level operators");
    h.levels[l + 1].prolongation =
        masked_prolongation(p, h.levels[l + 1].constrained, h.levels[l].constrained);
    if (galerkin)
      h.levels[l].op =
          galerkin_coarse(h.levels[l + 1].op, h.levels[l + 1].prolongation, h.levels[l].constrained);
    else
      h.levels[l].op = eliminate_constraints(systems[l].raw, systems[l].bc);
  }

  Eigen::MatrixXd coarse_dense = Eigen::MatrixXd(h.levels[0].op.m);
  h.coarse_factorization.compute(coarse_dense);
  bool singular = h.coarse_factorization.info() != Eigen::Success;
  if (!singular) {
    // LLT can succeed with a vanishing pivot on a numerically singular
    // matrix; check the Cholesky diagonal explicitly.
    // A numerically singular matrix leaves a pivot of order
    // sqrt(eps * scale); anything below sqrt(1e-13) * scale is rejected.
    Eigen::VectorXd pivots = h.coarse_factorization.matrixLLT().diagonal();
    if (!pivots.allFinite() || pivots.minCoeff() <= 3e-7 * pivots.maxCoeff()) singular = true;
  }
  if (singular)
    fail("coarse factorization is singular; the operator has a null space (check boundary "
         "conditions and constraint coverage)");
  return h;
}

void symmetric_gauss_seidel(const SparseOperator& a, const Eigen::VectorXd& rhs, Eigen::VectorXd& x,
                            int sweeps) {
  const int n = a.rows();
  for (int s = 0; s < sweeps; ++s) {
    for (int i = 0; i < n; ++i) {
      double diag = 0.0, sum = 0.0;
      for (SpMat::InnerIterator it(a.m, i); it; ++it) {
        if (it.col() == i) diag = it.value();
        else sum += it.value() * x[it.col()];
      }
      x[i] = (rhs[i] - sum) / diag;
    }
    for (int i = n - 1; i >= 0; --i) {
      double diag = 0.0, sum = 0.0;
      for (SpMat::InnerIterator it(a.m, i); it; ++it) {
        if (it.col() == i) diag = it.value();
        else sum += it.value() * x[it.col()];
      }
      x[i] = (rhs[i] - sum) / diag;
    }
  }
}

namespace {

void v_cycle_recurse(const MgHierarchy& h, int level, const Eigen::VectorXd& rhs,
                     Eigen::VectorXd& x) {
  const MgLevel& lvl = h.levels[level];
  if (level == 0) {
    x = h.coarse_factorization.solve(rhs);
    return;
  }
  symmetric_gauss_seidel(lvl.op, rhs, x, h.nu_pre);
  Eigen::VectorXd residual = rhs - lvl.op.m * x;
  Eigen::VectorXd coarse_rhs = lvl.prolongation.transpose() * residual;
  Eigen::VectorXd coarse_x = Eigen::VectorXd::Zero(coarse_rhs.size());
  v_cycle_recurse(h, level - 1, coarse_rhs, coarse_x);
  x += lvl.prolongation * coarse_x;
  symmetric_gauss_seidel(lvl.op, rhs, x, h.nu_post);
}

}  // namespace

Eigen::VectorXd v_cycle(const MgHierarchy& h, const Eigen::VectorXd& rhs) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(rhs.size());
  v_cycle_recurse(h, h.num_levels() - 1, rhs, x);
  return x;
}

Preconditioner identity_preconditioner() {
  return [](const Eigen::VectorXd& r) { return r; };
}

Preconditioner jacobi_preconditioner(const SparseOperator& a) {
  Eigen::VectorXd inv_diag = a.m.diagonal().cwiseInverse();
  return [inv_diag](const Eigen::VectorXd& r) { return (inv_diag.array() * r.array()).matrix(); };
}

Preconditioner mg_preconditioner(const MgHierarchy& h) {
  return [&h](const Eigen::VectorXd& r) { return v_cycle(h, r); };
}

PcgResult pcg(const SparseOperator& a, const Eigen::VectorXd& b, const Preconditioner& precond,
              double rtol, int maxit) {
  PcgResult res;
  const int n = a.rows();
  res.x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r = b;
  Eigen::VectorXd z = precond(r);
  Eigen::VectorXd p = z;
  double rho = r.dot(z);
  if (rho < 0.0) fail("preconditioner is not positive definite");
  const double rho0 = rho;
  if (rho0 == 0.0) {
    res.converged = true;
    return res;
  }
  for (int it = 0; it < maxit; ++it) {
    Eigen::VectorXd ap = a.m * p;
    double curvature = p.dot(ap);
    if (curvature <= 0.0) fail("curvature breakdown: operator is not SPD on the free dofs");
    double alpha = rho / curvature;
    res.x += alpha * p;
    r -= alpha * ap;
    z = precond(r);
    double rho_next = r.dot(z);
    if (rho_next < 0.0) fail("preconditioner is not positive definite");
    ++res.iterations;
    res.rel_residual = std::sqrt(rho_next / rho0);
    if (res.rel_residual <= rtol) {
      res.converged = true;
      return res;
    }
    p = z + (rho_next / rho) * p;
    rho = rho_next;
  }
  return res;
}

}  // namespace shapemg
