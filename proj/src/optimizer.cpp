#include "shapemg/optimizer.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <optional>
#include <stdexcept>

namespace shapemg {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("optimizer: " + msg); }

struct MemoryPair {
  Eigen::VectorXd s;  // accepted step field
  Eigen::VectorXd y;  // gradient-representation difference
};

// Two-loop recursion in the metric inner product; the gradient representation
// U already carries the inverse metric, so the base Hessian approximation is
// gamma * identity on fields.
Eigen::VectorXd lbfgs_direction(const Eigen::VectorXd& u, const std::deque<MemoryPair>& memory,
                                const SteklovMetric& metric) {
  if (memory.empty()) return -u;
  std::vector<double> rho, alpha;
  std::vector<const MemoryPair*> pairs;
  for (const auto& p : memory) {
    double sy = metric.gs_inner(p.s, p.y);
    if (sy > 0.0) {
      pairs.push_back(&p);
      rho.push_back(1.0 / sy);
    }
  }
  if (pairs.empty()) return -u;
  alpha.resize(pairs.size());
  Eigen::VectorXd q = u;
  for (int i = static_cast<int>(pairs.size()) - 1; i >= 0; --i) {
    alpha[i] = rho[i] * metric.gs_inner(pairs[i]->s, q);
    q -= alpha[i] * pairs[i]->y;
  }
  const MemoryPair& newest = *pairs.back();
  double yy = metric.gs_inner(newest.y, newest.y);
  double gamma = yy > 0.0 ? metric.gs_inner(newest.s, newest.y) / yy : 1.0;
  if (!std::isfinite(gamma) || gamma <= 0.0) gamma = 1.0;
  Eigen::VectorXd r = gamma * q;
  for (size_t i = 0; i < pairs.size(); ++i) {
    double beta = rho[i] * metric.gs_inner(pairs[i]->y, r);
    r += (alpha[i] - beta) * pairs[i]->s;
  }
  if (!r.allFinite()) return -u;
  return -r;
}

}  // namespace

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::converged: return "converged";
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::mesh_validity_failure: return "mesh_validity_failure";
  }
  return "?";
}

ShapeOptimizer::ShapeOptimizer(ShapeProblem problem, OptimizerSettings settings)
    : problem_(std::move(problem)), settings_(std::move(settings)) {
  if (settings_.memory < 0 || settings_.memory > 5)
    fail("quasi-Newton memory must be between 0 and 5");
}

double ShapeOptimizer::safeguard_scale(const MeshLevel& level, const Eigen::VectorXd& direction,
                                       double gamma, double beta, double cap,
                                       int max_backtracks) {
  const int d = level.dim;
  if (direction.size() != static_cast<Eigen::Index>(level.num_vertices()) * d)
    fail("direction size does not match the level");
  Eigen::VectorXd min_edge = level.min_incident_edge_length();
  double scale = cap;
  for (int v = 0; v < level.num_vertices(); ++v) {
    double mag = direction.segment(v * d, d).norm();
    if (mag > 0.0) scale = std::min(scale, gamma * min_edge[v] / mag);
  }
  // Back off until no finest-level simplex inverts.
  MeshLevel trial = level;
  for (int k = 0; k <= max_backtracks; ++k) {
    for (int v = 0; v < level.num_vertices(); ++v)
      for (int c = 0; c < d; ++c)
        trial.coords(v, c) = level.coords(v, c) + scale * direction[v * d + c];
    bool valid = true;
    for (int e = 0; e < trial.num_elements() && valid; ++e)
      if (!(trial.element_volume(e) > 0.0)) valid = false;
    if (valid) return scale;
    scale *= beta;
  }
  fail("no admissible step scale found (mesh-validity failure)");
}

double ShapeOptimizer::active_nu4(const SimplicialMeshHierarchy& h, int accepted_steps) const {
  double nu4 = problem_.objective.nu4;
  const RegularizationSchedule& sched = settings_.schedule;
  if (sched.switch_after >= 0 && accepted_steps >= sched.switch_after) nu4 = sched.nu4_after;
  if (nu4 > 0.0 && settings_.nu4_scale_with_h && h.num_levels() > 1) {
    double h_fine = h.finest().mean_interface_edge_length();
    double h_coarse = h.coarsest().mean_interface_edge_length();
    if (h_coarse > 0.0) nu4 *= h_fine / h_coarse;
  }
  return nu4;
}

namespace {

struct States {
  Eigen::VectorXd u, w;
  TransientTrajectory y, z;
  std::vector<Eigen::VectorXd> ybar;
};

States solve_states(const SimplicialMeshHierarchy& h, const ShapeProblem& problem,
                    bool with_adjoints) {
  States s;
  const ObjectiveSpec& spec = problem.objective;
  if (spec.nu1 > 0.0) {
    s.u = solve_elastic_state(h, problem.coeffs, spec.f_top, problem.solver);
    if (with_adjoints)
      s.w = solve_elastic_adjoint(h, problem.coeffs, spec.f_top, spec.nu1, problem.solver);
  }
  if (spec.nu2 > 0.0) {
    TimeWeights weights = spec.weights();
    s.y = march_diffusion_state(h, problem.coeffs, spec.dt, spec.t_end, problem.solver);
    s.ybar = problem.measurements.realize(h.finest(), weights);
    if (with_adjoints)
      s.z = march_diffusion_adjoint(h, problem.coeffs, s.y, s.ybar, weights, spec.nu2,
                                    problem.solver);
  }
  return s;
}

}  // namespace

IterationData ShapeOptimizer::evaluate(const SimplicialMeshHierarchy& h,
                                       const SteklovMetric& metric, double nu4) const {
  const MeshLevel& level = h.finest();
  ObjectiveSpec spec = problem_.objective;
  spec.nu4 = nu4;
  spec.validate(h.dim());

  States s = solve_states(h, problem_, /*with_adjoints=*/true);

  IterationData data;
  data.objective = eval_objective(level, problem_.coeffs, spec,
                                  spec.nu1 > 0.0 ? &s.u : nullptr,
                                  spec.nu2 > 0.0 ? &s.y : nullptr,
                                  spec.nu2 > 0.0 ? &s.ybar : nullptr);

  LoadRestriction restriction = metric.load_restriction(level);
  std::vector<ShapeDerivativeLoad> loads;
  if (spec.nu1 > 0.0)
    loads.push_back(assemble_dj1(level, problem_.coeffs, s.u, s.w, spec.nu1, restriction));
  if (spec.nu2 > 0.0)
    loads.push_back(assemble_dj2(level, problem_.coeffs, s.y, s.z, s.ybar, spec.weights(),
                                 spec.nu2, restriction));
  if (spec.nu3 > 0.0) loads.push_back(assemble_dj3(level, spec.nu3, restriction));
  if (spec.nu4 > 0.0) {
    if (settings_.perimeter_surface_form)
      loads.push_back(
          assemble_dj4_surface(level, discrete_mean_curvature(level), spec.nu4, restriction));
    else
      loads.push_back(assemble_dj4_volume(level, spec.nu4, restriction));
  }
  if (loads.empty()) {
    data.load.b = Eigen::VectorXd::Zero(level.num_vertices() * h.dim());
  } else {
    data.load = combine_loads(loads);
  }
  data.gradient = metric.solve(data.load.b);
  return data;
}

ObjectiveValue ShapeOptimizer::evaluate_objective_only(const SimplicialMeshHierarchy& h,
                                                       double nu4) const {
  ObjectiveSpec spec = problem_.objective;
  spec.nu4 = nu4;
  States s = solve_states(h, problem_, /*with_adjoints=*/false);
  return eval_objective(h.finest(), problem_.coeffs, spec, spec.nu1 > 0.0 ? &s.u : nullptr,
                        spec.nu2 > 0.0 ? &s.y : nullptr, spec.nu2 > 0.0 ? &s.ybar : nullptr);
}

OptimizeOutcome ShapeOptimizer::run(
    const SimplicialMeshHierarchy& initial,
    const std::function<void(int, const SimplicialMeshHierarchy&, const HistoryRow&)>& on_accept)
    const {
  OptimizeOutcome outcome;
  outcome.hierarchy = initial;
  problem_.objective.validate(initial.dim());

  std::deque<MemoryPair> memory;
  Eigen::VectorXd previous_gradient;
  Eigen::VectorXd previous_step;
  double gs_initial = -1.0;

  for (int iter = 0; iter < settings_.max_iterations; ++iter) {
    double nu4 = active_nu4(outcome.hierarchy, outcome.accepted_steps);
    // Degrading aspect ratios eventually break the solvers (singular coarse
    // factorization, stalled PCG); that is a mesh-validity halt, not a crash.
    std::optional<SteklovMetric> metric;
    IterationData data;
    try {
      metric.emplace(outcome.hierarchy, settings_.metric_lambda, settings_.metric_mu,
                     problem_.solver);
      data = evaluate(outcome.hierarchy, *metric, nu4);
    } catch (const std::exception&) {
      outcome.reason = StopReason::mesh_validity_failure;
      return outcome;
    }
    double gs = data.gradient.gs_norm();
    if (gs_initial < 0.0) gs_initial = gs;

    HistoryRow row;
    row.iter = iter;
    row.total = data.objective.total;
    row.j1 = data.objective.j1;
    row.j2 = data.objective.j2;
    row.j3 = data.objective.j3;
    row.j4 = data.objective.j4;
    row.gs_norm = gs;
    row.nu4 = nu4;

    double tol = std::max(settings_.gs_tol_abs, settings_.gs_tol_rel * gs_initial);
    if (gs <= tol) {
      row.step_scale = 0.0;
      outcome.history.push_back(row);
      outcome.reason = StopReason::converged;
      return outcome;
    }

    // Quasi-Newton memory: the pair belonging to the previous accepted step
    // becomes usable once the gradient at the new shape is known.
    if (settings_.mode == OptimizerMode::lbfgs && previous_step.size() > 0) {
      MemoryPair pair{previous_step, data.gradient.u - previous_gradient};
      if (metric->gs_inner(pair.s, pair.y) > 0.0) {
        memory.push_back(std::move(pair));
        while (static_cast<int>(memory.size()) > settings_.memory) memory.pop_front();
      }
    }

    Eigen::VectorXd direction = settings_.mode == OptimizerMode::lbfgs
                                    ? lbfgs_direction(data.gradient.u, memory, *metric)
                                    : Eigen::VectorXd(-data.gradient.u);
    double slope = data.load(direction);  // dJ[direction]
    if (!(slope < 0.0)) {
      // Stale curvature information; fall back to steepest descent.
      memory.clear();
      direction = -data.gradient.u;
      slope = -data.gradient.energy;
    }

    double scale;
    try {
      scale = safeguard_scale(outcome.hierarchy.finest(), direction, settings_.safeguard_gamma,
                              settings_.safeguard_beta, settings_.safeguard_cap,
                              settings_.max_backtracks);
    } catch (const std::exception&) {
      outcome.history.push_back(row);
      outcome.reason = StopReason::mesh_validity_failure;
      return outcome;
    }

    bool accepted = false;
    for (int k = 0; k <= settings_.max_backtracks && !accepted; ++k) {
      auto trial = try_deform_all_levels(outcome.hierarchy, direction, scale);
      if (trial) {
        double j_trial = evaluate_objective_only(*trial, nu4).total;
        if (std::isfinite(j_trial) &&
            j_trial <= data.objective.total + settings_.armijo_c1 * scale * slope) {
          outcome.hierarchy = std::move(*trial);
          accepted = true;
          break;
        }
      }
      scale *= settings_.safeguard_beta;
    }
    if (!accepted) {
      outcome.history.push_back(row);
      outcome.reason = StopReason::mesh_validity_failure;
      return outcome;
    }

    previous_gradient = data.gradient.u;
    previous_step = scale * direction;
    ++outcome.accepted_steps;
    row.step_scale = scale;
    outcome.history.push_back(row);
    if (on_accept) on_accept(iter, outcome.hierarchy, row);
  }
  outcome.reason = StopReason::max_iterations;
  return outcome;
}

void write_history_csv(const std::vector<HistoryRow>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot open '" + path + "' for writing");
  out << "iter,J,j1,j2,j3,j4,gs_norm,nu4,step_scale\n";
  char buf[400];
  for (const auto& row : history) {
    std::snprintf(buf, sizeof(buf),
                  "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", row.iter, row.total,
                  row.j1, row.j2, row.j3, row.j4, row.gs_norm, row.nu4, row.step_scale);
    out << buf;
  }
}

}  // namespace shapemg
