#include "shapemg/shape_calculus.hpp"

#include <cmath>
#include <stdexcept>

namespace shapemg {

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw std::runtime_error("shape_calculus: " + msg);
}

Eigen::MatrixXd element_jacobian(const MeshLevel& level, int e, const Eigen::VectorXd& field,
                                 const Eigen::MatrixXd& grads) {
  const int d = level.dim;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i <= d; ++i) {
    int v = level.simplices(e, i);
    for (int a = 0; a < d; ++a) jac.row(a) += field[v * d + a] * grads.col(i).transpose();
  }
  return jac;
}

Eigen::MatrixXd stress_of(const Eigen::MatrixXd& jac, double lambda, double mu) {
  Eigen::MatrixXd eps = 0.5 * (jac + jac.transpose());
  Eigen::MatrixXd sig = 2.0 * mu * eps;
  sig.diagonal().array() += lambda * eps.trace();
  return sig;
}

}  // namespace

TimeWeights ObjectiveSpec::weights() const {
  return mode == MeasurementMode::integral ? TimeWeights::integral(steps(), dt)
                                           : TimeWeights::instants(steps());
}

void ObjectiveSpec::validate(int dim) const {
  if (nu1 < 0.0 || nu2 < 0.0 || nu3 < 0.0 || nu4 < 0.0) fail("weights must be non-negative");
  if (nu1 > 0.0 && f_top.size() != dim) fail("f_top must be a d-vector when nu1 > 0");
  if (nu2 > 0.0) {
    step_count(t_end, dt);
    if (mode == MeasurementMode::instants && steps() % 2 != 0)
      fail("instants mode needs an even step count");
  }
}

ObjectiveValue eval_objective(const MeshLevel& level, const MaterialCoefficients& coeffs,
                              const ObjectiveSpec& spec, const Eigen::VectorXd* u,
                              const TransientTrajectory* y,
                              const std::vector<Eigen::VectorXd>* ybar) {
  const int d = level.dim;
  ObjectiveValue val;

  if (spec.nu1 > 0.0) {
    if (!u) fail("nu1 > 0 requires the elastic state");
    Eigen::MatrixXd grads;
    double vol;
    double energy = 0.0;
    for (int e = 0; e < level.num_elements(); ++e) {
      element_basis_gradients(level, e, grads, vol);
      Eigen::MatrixXd ju = element_jacobian(level, e, *u, grads);
      Eigen::MatrixXd sig = stress_of(ju, coeffs.lambda(level.elem_subdomain[e]),
                                      coeffs.mu(level.elem_subdomain[e]));
      Eigen::MatrixXd eps = 0.5 * (ju + ju.transpose());
      energy += vol * (sig.array() * eps.array()).sum();
    }
    val.j1 = spec.nu1 * energy;
  }

  if (spec.nu2 > 0.0) {
    if (!y || !ybar) fail("nu2 > 0 requires the diffusion trajectory and measurements");
    TimeWeights weights = spec.weights();
    if (static_cast<int>(y->fields.size()) != spec.steps() + 1)
      fail("trajectory length does not match the objective time grid");
    if (ybar->size() != y->fields.size()) fail("measurement trajectory length mismatch");
    double tracking = 0.0;
    for (int n = 1; n <= spec.steps(); ++n) {
      if (weights.w[n] == 0.0) continue;
      Eigen::VectorXd diff = y->fields[n] - (*ybar)[n];
      // Exact integral of the P1 square via element mass matrices.
      double norm2 = 0.0;
      for (int e = 0; e < level.num_elements(); ++e) {
        Eigen::MatrixXd mass = element_mass_matrix(level, e);
        Eigen::VectorXd local(d + 1);
        for (int i = 0; i <= d; ++i) local[i] = diff[level.simplices(e, i)];
        norm2 += local.dot(mass * local);
      }
      tracking += weights.w[n] * 0.5 * spec.nu2 * norm2;
    }
    val.j2 = tracking;
  }

  if (spec.nu3 > 0.0) val.j3 = spec.nu3 * level.subdomain_volume(0);
  if (spec.nu4 > 0.0) val.j4 = spec.nu4 * level.interface_measure();

  val.total = val.j1 + val.j2 + val.j3 + val.j4;
  return val;
}

LoadRestriction LoadRestriction::interface_support(const MeshLevel& level,
                                                   const std::vector<char>& constrained_dofs) {
  const int d = level.dim;
  std::vector<char> on_interface = interface_vertex_mask(level);
  std::vector<char> keep_vertex(level.num_vertices(), 0);
  for (int e = 0; e < level.num_elements(); ++e) {
    bool touches = false;
    for (int i = 0; i <= d; ++i) touches |= static_cast<bool>(on_interface[level.simplices(e, i)]);
    if (touches)
      for (int i = 0; i <= d; ++i) keep_vertex[level.simplices(e, i)] = 1;
  }
  LoadRestriction r;
  r.keep.assign(static_cast<size_t>(level.num_vertices()) * d, 0);
  for (int v = 0; v < level.num_vertices(); ++v)
    for (int c = 0; c < d; ++c) r.keep[v * d + c] = keep_vertex[v];
  if (!constrained_dofs.empty()) {
    if (constrained_dofs.size() != r.keep.size()) fail("constraint mask size mismatch");
    for (size_t i = 0; i < r.keep.size(); ++i)
      if (constrained_dofs[i]) r.keep[i] = 0;
  }
  return r;
}

LoadRestriction LoadRestriction::none(int n) {
  LoadRestriction r;
  r.keep.assign(n, 1);
  return r;
}

void LoadRestriction::apply(Eigen::VectorXd& b) const {
  if (b.size() != static_cast<Eigen::Index>(keep.size())) fail("restriction mask size mismatch");
  for (Eigen::Index i = 0; i < b.size(); ++i)
    if (!keep[i]) b[i] = 0.0;
}

ShapeDerivativeLoad assemble_dj1(const MeshLevel& level, const MaterialCoefficients& coeffs,
                                 const Eigen::VectorXd& u, const Eigen::VectorXd& w, double nu1,
                                 const LoadRestriction& restriction) {
  const int d = level.dim;
  ShapeDerivativeLoad load;
  load.b = Eigen::VectorXd::Zero(level.num_vertices() * d);
  load.has_j1 = true;
  if (nu1 == 0.0 || u.size() == 0) return load;
  if (u.size() != load.b.size() || w.size() != load.b.size()) fail("field size mismatch in dj1");

  Eigen::MatrixXd grads;
  double vol;
  for (int e = 0; e < level.num_elements(); ++e) {
    element_basis_gradients(level, e, grads, vol);
    const double lam = coeffs.lambda(level.elem_subdomain[e]);
    const double mu = coeffs.mu(level.elem_subdomain[e]);
    Eigen::MatrixXd ju = element_jacobian(level, e, u, grads);
    Eigen::MatrixXd jw = element_jacobian(level, e, w, grads);
    Eigen::MatrixXd su = stress_of(ju, lam, mu);
    Eigen::MatrixXd sw = stress_of(jw, lam, mu);
    double su_eps_w = (su.array() * (0.5 * (jw + jw.transpose())).array()).sum();
    // For test field V = phi_i e_c: grad V = e_c g_i^T, so
    //   sigma(u) : (grad w grad V) = (d w / d x_c) . (sigma(u) g_i)
    // with the c-th partial in jw.col(c), and div V = g_i[c].
    Eigen::MatrixXd su_g = su * grads;  // d x (d+1)
    Eigen::MatrixXd sw_g = sw * grads;
    for (int i = 0; i <= d; ++i) {
      int v = level.simplices(e, i);
      for (int c = 0; c < d; ++c) {
        double value = -jw.col(c).dot(su_g.col(i)) - ju.col(c).dot(sw_g.col(i)) +
                       grads(c, i) * su_eps_w;
        load.b[v * d + c] += vol * value;
      }
    }
  }
  restriction.apply(load.b);
  return load;
}

ShapeDerivativeLoad assemble_dj2(const MeshLevel& level, const MaterialCoefficients& coeffs,
                                 const TransientTrajectory& y, const TransientTrajectory& z,
                                 const std::vector<Eigen::VectorXd>& ybar,
                                 const TimeWeights& weights, double nu2,
                                 const LoadRestriction& restriction) {
  const int d = level.dim;
  const int nv = level.num_vertices();
  ShapeDerivativeLoad load;
  load.b = Eigen::VectorXd::Zero(nv * d);
  load.has_j2 = true;
  if (nu2 == 0.0) return load;
  const int steps = y.num_steps();
  if (z.num_steps() != steps) fail("state and adjoint trajectories disagree in length");
  if (static_cast<int>(ybar.size()) != steps + 1 ||
      static_cast<int>(weights.w.size()) != steps + 1)
    fail("measurement/weight length mismatch");
  const double dt = y.dt;

  Eigen::MatrixXd grads;
  double vol;
  for (int e = 0; e < level.num_elements(); ++e) {
    element_basis_gradients(level, e, grads, vol);
    const double k = coeffs.k(level.elem_subdomain[e]);
    Eigen::MatrixXd mass = element_mass_matrix(level, e);
    Eigen::VectorXd yl(d + 1), yp(d + 1), zl(d + 1), el(d + 1);
    for (int n = 1; n <= steps; ++n) {
      const Eigen::VectorXd& yn = y.fields[n];
      const Eigen::VectorXd& ypn = y.fields[n - 1];
      const Eigen::VectorXd& zn = z.fields[n];
      const bool weighted = weights.w[n] != 0.0;
      for (int i = 0; i <= d; ++i) {
        int v = level.simplices(e, i);
        yl[i] = yn[v];
        yp[i] = ypn[v];
        zl[i] = zn[v];
        el[i] = weighted ? yl[i] - ybar[n][v] : 0.0;
      }
      Eigen::VectorXd gy = grads * yl;  // element-constant gradient
      Eigen::VectorXd gz = grads * zl;
      double gy_gz = gy.dot(gz);
      double dy_mass_z = (yl - yp).dot(mass * zl);           // int (y^n - y^{n-1}) z
      double track = weighted ? el.dot(mass * el) : 0.0;     // int (y - ybar)^2
      for (int i = 0; i <= d; ++i) {
        int v = level.simplices(e, i);
        double gi_gy = grads.col(i).dot(gy);
        double gi_gz = grads.col(i).dot(gz);
        for (int c = 0; c < d; ++c) {
          // dt * z^T K'(V) y, with K' the transport derivative of the
          // stiffness; element-wise constant, one-point exact.
          double stiff =
              dt * k * vol * (-gy[c] * gi_gz - gi_gy * gz[c] + grads(c, i) * gy_gz);
          // z^T M'(V) (y^n - y^{n-1}) realizes div(V) ydot z dt exactly.
          double mass_term = grads(c, i) * dy_mass_z;
          double track_term =
              weighted ? weights.w[n] * 0.5 * nu2 * grads(c, i) * track : 0.0;
          load.b[v * d + c] += stiff + mass_term + track_term;
        }
      }
    }
  }
  restriction.apply(load.b);
  return load;
}

ShapeDerivativeLoad assemble_dj3(const MeshLevel& level, double nu3,
                                 const LoadRestriction& restriction) {
  const int d = level.dim;
  ShapeDerivativeLoad load;
  load.b = Eigen::VectorXd::Zero(level.num_vertices() * d);
  load.has_j3 = true;
  if (nu3 == 0.0) return load;
  Eigen::MatrixXd grads;
  double vol;
  for (int e = 0; e < level.num_elements(); ++e) {
    if (level.elem_subdomain[e] != 0) continue;
    element_basis_gradients(level, e, grads, vol);
    for (int i = 0; i <= d; ++i) {
      int v = level.simplices(e, i);
      for (int c = 0; c < d; ++c) load.b[v * d + c] += nu3 * vol * grads(c, i);
    }
  }
  restriction.apply(load.b);
  return load;
}

ShapeDerivativeLoad assemble_dj4_surface(const MeshLevel& level, const CurvatureField& kappa,
                                         double nu4, const LoadRestriction& restriction) {
  const int d = level.dim;
  ShapeDerivativeLoad load;
  load.b = Eigen::VectorXd::Zero(level.num_vertices() * d);
  load.has_j4 = true;
  load.j4_surface_form = true;
  if (nu4 == 0.0) return load;
  for (int f = 0; f < level.num_interface_facets(); ++f) {
    double measure = level.facet_measure(level.interface_facets, f);
    Eigen::VectorXd normal = level.interface_normal(f);
    double kappa_f = 0.0;
    for (int i = 0; i < d; ++i) kappa_f += kappa.values[level.interface_facets(f, i)];
    kappa_f /= d;
    for (int i = 0; i < d; ++i) {
      int v = level.interface_facets(f, i);
      for (int c = 0; c < d; ++c)
        load.b[v * d + c] += nu4 * kappa_f * measure * normal[c] / d;
    }
  }
  restriction.apply(load.b);
  return load;
}

ShapeDerivativeLoad assemble_dj4_volume(const MeshLevel& level, double nu4,
                                        const LoadRestriction& restriction) {
  const int d = level.dim;
  ShapeDerivativeLoad load;
  load.b = Eigen::VectorXd::Zero(level.num_vertices() * d);
  load.has_j4 = true;
  load.j4_surface_form = false;
  if (nu4 == 0.0) return load;
  for (int f = 0; f < level.num_interface_facets(); ++f) {
    if (d == 2) {
      int a = level.interface_facets(f, 0), b = level.interface_facets(f, 1);
      Eigen::Vector2d tangent = (level.coords.row(b) - level.coords.row(a)).normalized();
      // int_F div_Gamma V ds = t . (V_b - V_a): the exact length gradient.
      for (int c = 0; c < 2; ++c) {
        load.b[a * 2 + c] -= nu4 * tangent[c];
        load.b[b * 2 + c] += nu4 * tangent[c];
      }
    } else {
      // Exact area gradient of the triangle: grad_{x0} A = 0.5 n x (x2 - x1)
      // and cyclic, n the oriented unit normal.
      Eigen::Vector3d x0 = level.coords.row(level.interface_facets(f, 0));
      Eigen::Vector3d x1 = level.coords.row(level.interface_facets(f, 1));
      Eigen::Vector3d x2 = level.coords.row(level.interface_facets(f, 2));
      Eigen::Vector3d n = (x1 - x0).cross(x2 - x0).normalized();
      std::array<Eigen::Vector3d, 3> grad = {0.5 * n.cross(x2 - x1), 0.5 * n.cross(x0 - x2),
                                             0.5 * n.cross(x1 - x0)};
      for (int i = 0; i < 3; ++i) {
        int v = level.interface_facets(f, i);
        for (int c = 0; c < 3; ++c) load.b[v * 3 + c] += nu4 * grad[i][c];
      }
    }
  }
  restriction.apply(load.b);
  return load;
}

ShapeDerivativeLoad combine_loads(const std::vector<ShapeDerivativeLoad>& loads) {
  if (loads.empty()) fail("no loads to combine");
  ShapeDerivativeLoad out;
  out.b = Eigen::VectorXd::Zero(loads.front().b.size());
  for (const auto& l : loads) {
    if (l.b.size() != out.b.size()) fail("load size mismatch");
    out.b += l.b;
    out.has_j1 |= l.has_j1;
    out.has_j2 |= l.has_j2;
    out.has_j3 |= l.has_j3;
    out.has_j4 |= l.has_j4;
    if (l.has_j4) out.j4_surface_form = l.j4_surface_form;
  }
  return out;
}

double fd_directional_derivative(const ObjectiveEvaluator& evaluate,
                                 const SimplicialMeshHierarchy& h, const Eigen::VectorXd& v,
                                 double t) {
  if (t <= 0.0) fail("perturbation parameter must be positive");
  if (v.norm() == 0.0) return 0.0;
  auto deformed = try_deform_all_levels(h, v, t);
  if (!deformed) fail("perturbed mesh is invalid at this step size; halve t");
  double j_t = evaluate(*deformed).total;
  double j_0 = evaluate(h).total;
  return (j_t - j_0) / t;
}

double observed_taylor_order(const std::vector<double>& ts, const std::vector<double>& errors,
                             double floor) {
  if (ts.size() != errors.size() || ts.size() < 2) fail("need at least two samples for an order");
  double max_error = 0.0;
  for (double e : errors) max_error = std::max(max_error, e);
  if (max_error <= floor) return 2.0;  // matches to rounding: better than any Taylor slope
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = static_cast<int>(ts.size());
  for (int i = 0; i < n; ++i) {
    double x = std::log(ts[i]);
    double y = std::log(std::max(errors[i], floor));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace shapemg
