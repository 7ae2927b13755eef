#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "shapemg/generators.hpp"
#include "shapemg/steklov.hpp"

#include <Eigen/Eigenvalues>

#include <random>

using namespace shapemg;

namespace {

SimplicialMeshHierarchy metric_hierarchy() {
  return build_hierarchy(make_ogrid_inclusion({0, 0}, {1, 1}, circle_radii(16, 0.3), 2, 3), 2);
}

Eigen::VectorXd random_free_field(const SteklovMetric& metric, int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = metric.constrained_dofs()[i] ? 0.0 : uni(rng);
  return v;
}

}  // namespace

TEST_CASE("deformation solve: zero load, linearity, energy identity") {
  SimplicialMeshHierarchy h = metric_hierarchy();
  SolverOptions opts;
  opts.rtol = 1e-12;
  SteklovMetric metric(h, 0.01, 0.1, opts);
  const int n = h.finest().num_vertices() * 2;

  DeformationField zero = metric.solve(Eigen::VectorXd::Zero(n));
  CHECK(zero.u.norm() == 0.0);
  CHECK(zero.gs_norm() == 0.0);

  LoadRestriction restriction = metric.load_restriction(h.finest());
  ShapeDerivativeLoad dj3 = assemble_dj3(h.finest(), 2.0, restriction);
  DeformationField u1 = metric.solve(dj3.b);
  DeformationField u2 = metric.solve(Eigen::VectorXd(2.0 * dj3.b));
  CHECK((u2.u - 2.0 * u1.u).norm() / u1.u.norm() < 1e-9);
  CHECK(u2.gs_norm() == doctest::Approx(2.0 * u1.gs_norm()).epsilon(1e-9));

  // a(U,U) = b(U) and the cached energy agrees with the operator quadratic form.
  double quad = metric.gs_inner(u1.u, u1.u);
  CHECK(std::abs(u1.energy - quad) / quad <= 1e-8);
  CHECK(std::abs(u1.energy - dj3.b.dot(u1.u)) / std::abs(u1.energy) <= 1e-12);
}

TEST_CASE("gs inner product: symmetry, homogeneity, Cauchy-Schwarz") {
  SimplicialMeshHierarchy h = metric_hierarchy();
  SolverOptions opts;
  SteklovMetric metric(h, 0.01, 0.1, opts);
  const int n = h.finest().num_vertices() * 2;

  Eigen::VectorXd a = random_free_field(metric, n, 1);
  Eigen::VectorXd b = random_free_field(metric, n, 2);
  CHECK(metric.gs_inner(a, b) == doctest::Approx(metric.gs_inner(b, a)).epsilon(1e-12));
  CHECK(metric.gs_norm(-3.0 * a) == doctest::Approx(3.0 * metric.gs_norm(a)).epsilon(1e-12));
  CHECK(metric.gs_inner(a, a) == doctest::Approx(metric.gs_norm(a) * metric.gs_norm(a)));
  for (unsigned seed = 3; seed < 6; ++seed) {
    Eigen::VectorXd c = random_free_field(metric, n, seed);
    CHECK(std::abs(metric.gs_inner(a, c)) <= metric.gs_norm(a) * metric.gs_norm(c) * (1 + 1e-12));
  }
}

TEST_CASE("coercivity: sliding constraints remove every rigid motion") {
  // Tiny mesh so a dense eigensolve is exact.
  SimplicialMeshHierarchy h = build_hierarchy(make_structured_box(3, 3, {0, 0}, {1, 1}), 1);
  SolverOptions opts;
  SteklovMetric metric(h, 0.01, 0.1, opts);
  Eigen::MatrixXd dense = Eigen::MatrixXd(metric.op().m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("the load-to-deformation map is self-adjoint in the metric") {
  SimplicialMeshHierarchy h = metric_hierarchy();
  SolverOptions opts;
  opts.rtol = 1e-13;
  SteklovMetric metric(h, 0.01, 0.1, opts);
  const MeshLevel& level = h.finest();
  LoadRestriction restriction = metric.load_restriction(level);

  ShapeDerivativeLoad b1 = assemble_dj3(level, 1.0, restriction);
  ShapeDerivativeLoad b2 =
      assemble_dj4_surface(level, discrete_mean_curvature(level), 1.0, restriction);
  DeformationField u1 = metric.solve(b1.b);
  DeformationField u2 = metric.solve(b2.b);
  double lhs = metric.gs_inner(u1.u, u2.u);
  double rhs = b1.b.dot(u2.u);
  CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
}

TEST_CASE("constraint handling: loads on constrained dofs do not leak") {
  SimplicialMeshHierarchy h = metric_hierarchy();
  SolverOptions opts;
  SteklovMetric metric(h, 0.01, 0.1, opts);
  const int n = h.finest().num_vertices() * 2;
  // A load living only on constrained dofs solves to zero.
  Eigen::VectorXd bad = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    if (metric.constrained_dofs()[i]) bad[i] = 1.0;
  DeformationField u = metric.solve(bad);
  CHECK(u.u.norm() == 0.0);
}
