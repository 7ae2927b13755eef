#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "shapemg/generators.hpp"
#include "shapemg/optimizer.hpp"

#include <cstdio>
#include <fstream>

using namespace shapemg;

namespace {

ShapeProblem geometric_problem() {
  ShapeProblem p;
  p.objective.nu3 = 4.0;
  p.objective.nu4 = 1.0;
  p.solver.rtol = 1e-10;
  return p;
}

SimplicialMeshHierarchy star_hierarchy() {
  return build_hierarchy(make_ogrid_inclusion({0, 0}, {1, 1}, star_radii(32, 0.25, 0.15, 5), 3, 4),
                         2);
}

}  // namespace

TEST_CASE("safeguard scale: trivial, inversion, monotonicity") {
  MeshLevel m = make_structured_box(4, 4, {0, 0}, {1, 1});
  const int n = m.num_vertices() * 2;

  SUBCASE("zero direction returns the cap") {
    CHECK(ShapeOptimizer::safeguard_scale(m, Eigen::VectorXd::Zero(n), 0.3, 0.5, 1.0, 30) == 1.0);
  }

  SUBCASE("a direction that inverts an element at scale 1 is backed off to validity") {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    std::vector<char> on_bdy = boundary_vertex_mask(m);
    int moved = -1;
    for (int v = 0; v < m.num_vertices(); ++v)
      if (!on_bdy[v]) {
        u[2 * v] = 1.0;  // would carry the vertex across the whole mesh
        moved = v;
        break;
      }
    REQUIRE(moved >= 0);
    double scale = ShapeOptimizer::safeguard_scale(m, u, 0.3, 0.5, 1.0, 30);
    CHECK(scale < 1.0);
    MeshLevel trial = m;
    trial.coords(moved, 0) += scale;
    for (int e = 0; e < trial.num_elements(); ++e) CHECK(trial.element_volume(e) > 0.0);
  }

  SUBCASE("doubling the direction halves the scale up to one backtrack factor") {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    std::vector<char> on_bdy = boundary_vertex_mask(m);
    for (int v = 0; v < m.num_vertices(); ++v)
      if (!on_bdy[v]) {
        u[2 * v] = 0.4;
        u[2 * v + 1] = -0.25;
      }
    double s1 = ShapeOptimizer::safeguard_scale(m, u, 0.3, 0.5, 10.0, 30);
    double s2 = ShapeOptimizer::safeguard_scale(m, Eigen::VectorXd(2.0 * u), 0.3, 0.5, 10.0, 30);
    CHECK(s2 <= 0.5 * s1 * (1.0 + 1e-12));
    CHECK(s2 >= 0.25 * s1 * (1.0 - 1e-12));
  }
}

TEST_CASE("zero gradient declares convergence without touching the mesh") {
  // nu1 = nu3 = nu4 = 0 and ybar equal to the current geometry's trajectory.
  ShapeProblem p;
  p.coeffs.k_int = 0.001;
  p.objective.nu2 = 0.5;
  p.objective.t_end = 15.0;
  p.objective.dt = 1.5;
  p.objective.mode = MeasurementMode::instants;
  p.solver.rtol = 1e-11;
  SimplicialMeshHierarchy h = star_hierarchy();
  TransientTrajectory y = march_diffusion_state(h, p.coeffs, 1.5, 15.0, p.solver);
  p.measurements = MeasurementHandle::from_nodal(y.fields);

  OptimizerSettings settings;
  settings.max_iterations = 5;
  settings.gs_tol_abs = 1e-12;
  ShapeOptimizer opt(p, settings);
  OptimizeOutcome out = opt.run(h);
  CHECK(out.reason == StopReason::converged);
  CHECK(out.accepted_steps == 0);
  REQUIRE(out.history.size() == 1);
  CHECK(out.history[0].gs_norm == 0.0);
  CHECK((out.hierarchy.finest().coords - h.finest().coords).norm() == 0.0);
}

TEST_CASE("first lbfgs step with empty memory reproduces gradient descent exactly") {
  ShapeProblem p = geometric_problem();
  SimplicialMeshHierarchy h = star_hierarchy();
  OptimizerSettings gd, lb;
  gd.mode = OptimizerMode::gradient_descent;
  lb.mode = OptimizerMode::lbfgs;
  gd.max_iterations = lb.max_iterations = 1;
  OptimizeOutcome a = ShapeOptimizer(p, gd).run(h);
  OptimizeOutcome b = ShapeOptimizer(p, lb).run(h);
  REQUIRE(a.accepted_steps == 1);
  REQUIRE(b.accepted_steps == 1);
  CHECK(a.history[0].step_scale == b.history[0].step_scale);
  CHECK((a.hierarchy.finest().coords - b.hierarchy.finest().coords).norm() == 0.0);
}

TEST_CASE("geometric run: monotone objective and decreasing gradient norm") {
  ShapeProblem p = geometric_problem();
  SimplicialMeshHierarchy h = star_hierarchy();
  OptimizerSettings settings;
  settings.mode = OptimizerMode::gradient_descent;
  settings.max_iterations = 12;
  ShapeOptimizer opt(p, settings);
  OptimizeOutcome out = opt.run(h);
  REQUIRE(out.accepted_steps == 12);
  for (size_t i = 1; i < out.history.size(); ++i)
    CHECK(out.history[i].total < out.history[i - 1].total);
  // Gradient norm after 12 steps is at most a tenth of the initial one.
  CHECK(out.history.back().gs_norm <= 0.1 * out.history.front().gs_norm);
  // Nesting stays exact and every level stays positively oriented.
  for (int l = 0; l + 1 < out.hierarchy.num_levels(); ++l) {
    const MeshLevel& coarse = out.hierarchy.levels[l];
    const MeshLevel& fine = out.hierarchy.levels[l + 1];
    for (int v = 0; v < coarse.num_vertices(); ++v)
      CHECK((coarse.coords.row(v) - fine.coords.row(v)).norm() == 0.0);
    validate_mesh(coarse);
  }
}

TEST_CASE("lbfgs needs no more iterations than gradient descent to smooth the star") {
  ShapeProblem p = geometric_problem();
  SimplicialMeshHierarchy h = star_hierarchy();
  auto iterations_to = [&](OptimizerMode mode, double rel_tol) {
    OptimizerSettings s;
    s.mode = mode;
    s.max_iterations = 60;
    s.gs_tol_rel = rel_tol;
    OptimizeOutcome out = ShapeOptimizer(p, s).run(h);
    REQUIRE(out.reason == StopReason::converged);
    return static_cast<int>(out.history.size());
  };
  int gd = iterations_to(OptimizerMode::gradient_descent, 0.1);
  int lbfgs = iterations_to(OptimizerMode::lbfgs, 0.1);
  CHECK(lbfgs <= gd);
}

TEST_CASE("regularization schedule switches nu4 after the configured step count") {
  ShapeProblem p = geometric_problem();
  p.objective.nu3 = 0.0;  // pure perimeter shrinkage, always well behaved
  SimplicialMeshHierarchy h = star_hierarchy();
  OptimizerSettings settings;
  settings.mode = OptimizerMode::gradient_descent;
  settings.max_iterations = 6;
  settings.schedule.switch_after = 3;
  settings.schedule.nu4_after = 0.25;
  ShapeOptimizer opt(p, settings);
  OptimizeOutcome out = opt.run(h);
  REQUIRE(out.history.size() >= 5);
  for (size_t i = 0; i < out.history.size(); ++i) {
    if (static_cast<int>(i) < 3) CHECK(out.history[i].nu4 == 1.0);
    else CHECK(out.history[i].nu4 == 0.25);
  }
}

TEST_CASE("nu4 level scaling follows the interface mesh width") {
  ShapeProblem p = geometric_problem();
  OptimizerSettings settings;
  settings.nu4_scale_with_h = true;
  ShapeOptimizer opt(p, settings);
  SimplicialMeshHierarchy h = star_hierarchy();  // 2 levels: h_fine = h_coarse / 2
  double nu4 = opt.active_nu4(h, 0);
  CHECK(nu4 == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("history csv has the pinned header and one full-precision row per iteration") {
  std::vector<HistoryRow> history(2);
  history[0].iter = 0;
  history[0].total = 1.0 / 3.0;
  history[1].iter = 1;
  history[1].gs_norm = 2.0 / 7.0;
  write_history_csv(history, "/tmp/shapemg_history_test.csv");
  std::ifstream in("/tmp/shapemg_history_test.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "iter,J,j1,j2,j3,j4,gs_norm,nu4,step_scale");
  std::getline(in, line);
  CHECK(line.find("0.33333333333333331") != std::string::npos);
  std::getline(in, line);
  CHECK(line.find("0.2857142857142857") != std::string::npos);
}
