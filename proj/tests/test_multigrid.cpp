#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "shapemg/generators.hpp"
#include "shapemg/multigrid.hpp"
#include "shapemg/physics.hpp"

#include <cmath>
#include <random>

using namespace shapemg;

namespace {

BoundaryConditionSet poisson_bcs() {
  BoundaryConditionSet bcs;
  bcs.conditions[BoundaryLabel::top] = BoundaryCondition::dirichlet(0.0);
  bcs.conditions[BoundaryLabel::bottom] = BoundaryCondition::dirichlet(0.0);
  bcs.conditions[BoundaryLabel::left] = BoundaryCondition::dirichlet(0.0);
  bcs.conditions[BoundaryLabel::right] = BoundaryCondition::dirichlet(0.0);
  return bcs;
}

LevelAssembler poisson_assembler(const MaterialCoefficients& coeffs) {
  return [coeffs](const MeshLevel& level) {
    DiffusionSystem sys = assemble_diffusion(level, coeffs, poisson_bcs());
    return LevelSystem{sys.stiffness_raw, sys.bc};
  };
}

Eigen::VectorXd random_vector(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

}  // namespace

TEST_CASE("v-cycle basics: zero rhs and single-level exact solve") {
  MaterialCoefficients coeffs;
  SimplicialMeshHierarchy h1 = build_hierarchy(make_structured_box(4, 4, {0, 0}, {1, 1}), 1);
  SolverOptions opts;
  MgHierarchy mg1 = build_problem_mg(h1, poisson_assembler(coeffs), 1, opts);
  Eigen::VectorXd b = random_vector(mg1.finest_op().rows(), 1);
  Eigen::VectorXd x = v_cycle(mg1, b);
  CHECK((mg1.finest_op().m * x - b).lpNorm<Eigen::Infinity>() < 1e-11);
  CHECK(v_cycle(mg1, Eigen::VectorXd::Zero(b.size())).norm() == 0.0);

  SimplicialMeshHierarchy h3 = build_hierarchy(make_structured_box(4, 4, {0, 0}, {1, 1}), 3);
  MgHierarchy mg3 = build_problem_mg(h3, poisson_assembler(coeffs), 1, opts);
  CHECK(v_cycle(mg3, Eigen::VectorXd::Zero(mg3.finest_op().rows())).norm() == 0.0);
}

TEST_CASE("v-cycle error contraction on 4-level 2d poisson is at most 0.2") {
  MaterialCoefficients coeffs;
  SimplicialMeshHierarchy h = build_hierarchy(make_structured_box(4, 4, {0, 0}, {1, 1}), 4);
  SolverOptions opts;
  MgHierarchy mg = build_problem_mg(h, poisson_assembler(coeffs), 1, opts);
  const SparseOperator& a = mg.finest_op();

  // Measure ||e_{k+1}|| / ||e_k|| for the homogeneous problem from a random
  // initial error (zero the constrained entries so the error is admissible).
  Eigen::VectorXd e = random_vector(a.rows(), 3);
  for (size_t i = 0; i < mg.levels.back().constrained.size(); ++i)
    if (mg.levels.back().constrained[i]) e[i] = 0.0;
  double prev = e.norm();
  double worst = 0.0;
  for (int k = 0; k < 5; ++k) {
    // One preconditioned Richardson step for A e = 0: e <- e - M(A e).
    e -= v_cycle(mg, Eigen::VectorXd(a.m * e));
    double cur = e.norm();
    if (k >= 1) worst = std::max(worst, cur / prev);  // skip the transient
    prev = cur;
  }
  CHECK(worst <= 0.2);
}

TEST_CASE("preconditioner symmetry: <z1, M r2> == <M r1, z2> on random probes") {
  MaterialCoefficients coeffs;
  SimplicialMeshHierarchy h = build_hierarchy(make_structured_box(3, 3, {0, 0}, {1, 1}), 3);
  SolverOptions opts;
  MgHierarchy mg = build_problem_mg(h, poisson_assembler(coeffs), 1, opts);
  for (unsigned seed = 0; seed < 3; ++seed) {
    Eigen::VectorXd r1 = random_vector(mg.finest_op().rows(), 10 + seed);
    Eigen::VectorXd r2 = random_vector(mg.finest_op().rows(), 20 + seed);
    double lhs = r1.dot(v_cycle(mg, r2));
    double rhs = v_cycle(mg, r1).dot(r2);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("pcg: identity converges in one iteration; diagonal matches dense oracle") {
  SUBCASE("identity") {
    SparseOperator a;
    a.m.resize(10, 10);
    a.m.setIdentity();
    Eigen::VectorXd b = random_vector(10, 5);
    PcgResult res = pcg(a, b, identity_preconditioner(), 1e-12, 50);
    CHECK(res.converged);
    CHECK(res.iterations == 1);
    CHECK((res.x - b).norm() < 1e-12);
  }

  SUBCASE("diagonal condition 1e4 with jacobi preconditioning") {
    const int n = 50;
    SparseOperator a;
    a.m.resize(n, n);
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::VectorXd diag(n);
    for (int i = 0; i < n; ++i) {
      diag[i] = std::pow(10.0, 4.0 * i / (n - 1));
      trips.emplace_back(i, i, diag[i]);
    }
    a.m.setFromTriplets(trips.begin(), trips.end());
    Eigen::VectorXd b = random_vector(n, 6);
    PcgResult res = pcg(a, b, jacobi_preconditioner(a), 1e-13, 200);
    CHECK(res.converged);
    Eigen::VectorXd exact = b.cwiseQuotient(diag);
    CHECK((res.x - exact).norm() / exact.norm() < 1e-10);
  }
}

TEST_CASE("pcg curvature breakdown reports a non-SPD operator") {
  SparseOperator a;
  a.m.resize(2, 2);
  std::vector<Eigen::Triplet<double>> trips{{0, 0, 1.0}, {1, 1, -1.0}};
  a.m.setFromTriplets(trips.begin(), trips.end());
  Eigen::VectorXd b(2);
  b << 0.0, 1.0;
  CHECK_THROWS_WITH_AS(pcg(a, b, identity_preconditioner(), 1e-10, 10),
                       doctest::Contains("SPD"), std::runtime_error);
}

TEST_CASE("tiny system: pcg at rtol 1e-12 matches dense factorization") {
  MaterialCoefficients coeffs;
  SimplicialMeshHierarchy h = build_hierarchy(make_structured_box(2, 2, {0, 0}, {1, 1}), 2);
  SolverOptions opts;
  MgHierarchy mg = build_problem_mg(h, poisson_assembler(coeffs), 1, opts);
  const SparseOperator& a = mg.finest_op();
  Eigen::VectorXd b = random_vector(a.rows(), 9);
  PcgResult res = pcg(a, b, mg_preconditioner(mg), 1e-12, 100);
  CHECK(res.converged);
  Eigen::VectorXd dense = Eigen::LLT<Eigen::MatrixXd>(Eigen::MatrixXd(a.m)).solve(b);
  CHECK((res.x - dense).norm() / dense.norm() <= 1e-10);
}

TEST_CASE("mesh-independent iteration counts across levels 3-6") {
  auto run_level = [&](int levels, const LevelAssembler& assemble, int components,
                       const Eigen::VectorXd* load) {
    SimplicialMeshHierarchy h =
        build_hierarchy(make_structured_box(4, 4, {0, 0}, {1, 1}, IndexBox{1, 1, 0, 3, 3, 0}),
                        levels);
    SolverOptions opts;
    MgHierarchy mg = build_problem_mg(h, assemble, components, opts);
    Eigen::VectorXd b;
    if (load) b = *load;
    else {
      b = random_vector(mg.finest_op().rows(), 100 + levels);
      const auto& constrained = mg.levels.back().constrained;
      for (size_t i = 0; i < constrained.size(); ++i)
        if (constrained[i]) b[i] = 0.0;
    }
    PcgResult res = pcg(mg.finest_op(), b, mg_preconditioner(mg), 1e-10, 300);
    REQUIRE(res.converged);
    return res.iterations;
  };

  SUBCASE("poisson: spread at most 5") {
    MaterialCoefficients coeffs;
    std::vector<int> iters;
    for (int l = 3; l <= 6; ++l) iters.push_back(run_level(l, poisson_assembler(coeffs), 1, nullptr));
    int spread = *std::max_element(iters.begin(), iters.end()) -
                 *std::min_element(iters.begin(), iters.end());
    CHECK(spread <= 5);
  }

  SUBCASE("jumping diffusion, contrast 1e3: spread at most 8") {
    MaterialCoefficients coeffs;
    coeffs.k_int = 0.001;
    std::vector<int> iters;
    for (int l = 3; l <= 6; ++l) iters.push_back(run_level(l, poisson_assembler(coeffs), 1, nullptr));
    int spread = *std::max_element(iters.begin(), iters.end()) -
                 *std::min_element(iters.begin(), iters.end());
    CHECK(spread <= 8);
  }
}

TEST_CASE("galerkin and direct-assembly coarse operators agree on nested hierarchies") {
  MaterialCoefficients coeffs;
  coeffs.k_int = 0.01;
  SimplicialMeshHierarchy h =
      build_hierarchy(make_structured_box(4, 4, {0, 0}, {1, 1}, IndexBox{1, 1, 0, 3, 3, 0}), 3);
  SolverOptions galerkin, direct;
  direct.galerkin_coarse_operators = false;
  MgHierarchy mg_g = build_problem_mg(h, poisson_assembler(coeffs), 1, galerkin);
  MgHierarchy mg_d = build_problem_mg(h, poisson_assembler(coeffs), 1, direct);
  for (int l = 0; l < mg_g.num_levels(); ++l) {
    SpMat diff = SpMat(mg_g.levels[l].op.m - mg_d.levels[l].op.m);
    double err = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k)
      for (SpMat::InnerIterator it(diff, k); it; ++it) err = std::max(err, std::abs(it.value()));
    CHECK(err <= 1e-12);
  }
}

TEST_CASE("direct re-assembly still yields a convergent cycle on a deformed hierarchy") {
  MaterialCoefficients coeffs;
  SimplicialMeshHierarchy h =
      build_hierarchy(make_structured_box(4, 4, {0, 0}, {1, 1}, IndexBox{1, 1, 0, 3, 3, 0}), 3);
  // Deform by a smooth interior field; spaces are no longer exactly nested.
  const MeshLevel& fine = h.finest();
  Eigen::VectorXd u = Eigen::VectorXd::Zero(2 * fine.num_vertices());
  for (int v = 0; v < fine.num_vertices(); ++v) {
    double x = fine.coords(v, 0), y = fine.coords(v, 1);
    u[2 * v] = 0.04 * std::sin(M_PI * x) * std::sin(M_PI * y);
    u[2 * v + 1] = -0.03 * std::sin(M_PI * x) * std::sin(M_PI * y);
  }
  SimplicialMeshHierarchy moved = deform_all_levels(h, u, 1.0);
  for (bool galerkin : {true, false}) {
    SolverOptions opts;
    opts.galerkin_coarse_operators = galerkin;
    MgHierarchy mg = build_problem_mg(moved, poisson_assembler(coeffs), 1, opts);
    Eigen::VectorXd b = random_vector(mg.finest_op().rows(), 42);
    const auto& constrained = mg.levels.back().constrained;
    for (size_t i = 0; i < constrained.size(); ++i)
      if (constrained[i]) b[i] = 0.0;
    PcgResult res = pcg(mg.finest_op(), b, mg_preconditioner(mg), 1e-10, 100);
    CHECK(res.converged);
    CHECK(res.iterations < 30);
  }
}

TEST_CASE("singular coarse factorization is rejected with a null-space diagnostic") {
  // Pure Neumann Laplacian has the constant null space.
  MaterialCoefficients coeffs;
  BoundaryConditionSet bcs;
  for (auto l : {BoundaryLabel::bottom, BoundaryLabel::top, BoundaryLabel::left,
                 BoundaryLabel::right})
    bcs.conditions[l] = BoundaryCondition::neumann(0.0);
  SimplicialMeshHierarchy h = build_hierarchy(make_structured_box(3, 3, {0, 0}, {1, 1}), 2);
  auto assemble = [&](const MeshLevel& level) {
    DiffusionSystem sys = assemble_diffusion(level, coeffs, bcs);
    return LevelSystem{sys.stiffness_raw, sys.bc};
  };
  SolverOptions opts;
  CHECK_THROWS_WITH_AS(build_problem_mg(h, assemble, 1, opts), doctest::Contains("null space"),
                       std::runtime_error);
}
