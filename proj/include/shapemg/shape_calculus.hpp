#pragma once

#include "shapemg/physics.hpp"

#include <functional>

namespace shapemg {

enum class MeasurementMode { integral, instants };

/// Objective weights and time discretization. The tracking term either
/// integrates over (0,T] (right-endpoint rectangle rule) or samples the two
/// measurement instants T/2 and T.
struct ObjectiveSpec {
  double nu1 = 0.0;
  double nu2 = 0.0;
  double nu3 = 0.0;
  double nu4 = 0.0;
  Eigen::VectorXd f_top;
  double t_end = 15.0;
  double dt = 1.5;
  MeasurementMode mode = MeasurementMode::instants;

  int steps() const { return step_count(t_end, dt); }
  TimeWeights weights() const;
  void validate(int dim) const;
};

struct ObjectiveValue {
  double total = 0.0;
  double j1 = 0.0;  // compliance
  double j2 = 0.0;  // tracking
  double j3 = 0.0;  // volume of the out subdomain
  double j4 = 0.0;  // interface perimeter
};

/// j1 = nu1 int sigma(u):eps(u), j2 per measurement mode, j3 = nu3 |Omega_out|,
/// j4 = nu4 |Gamma_int|. States may be null when their weight vanishes.
ObjectiveValue eval_objective(const MeshLevel& level, const MaterialCoefficients& coeffs,
                              const ObjectiveSpec& spec, const Eigen::VectorXd* u,
                              const TransientTrajectory* y,
                              const std::vector<Eigen::VectorXd>* ybar);

/// Which shape-derivative pieces contributed to a load, and in which form.
struct ShapeDerivativeLoad {
  Eigen::VectorXd b;  // nodal vector load, dof layout vertex*d + component
  bool has_j1 = false, has_j2 = false, has_j3 = false, has_j4 = false;
  bool j4_surface_form = true;

  double operator()(const Eigen::VectorXd& v) const { return b.dot(v); }
};

/// Dofs allowed to carry shape-derivative load: a dof participates iff one of
/// its incident elements has a vertex on the interface. Everything else is
/// zeroed exactly, as is every dof in `fixed` (the deformation-metric
/// constraints).
struct LoadRestriction {
  std::vector<char> keep;  // per dof

  static LoadRestriction interface_support(const MeshLevel& level,
                                           const std::vector<char>& constrained_dofs);
  static LoadRestriction none(int n);  // keep everything (diagnostics)
  void apply(Eigen::VectorXd& b) const;
};

/// Volume form of the compliance derivative, evaluated with the elastic pair
/// (u, w): per element
///   -sigma(u):(grad w grad V) - sigma(w):(grad u grad V) + div(V) sigma(u):eps(w),
/// which is the exact derivative of the discrete compliance when w solves the
/// adjoint system with traction -nu1 f. One-point quadrature is exact (all
/// integrands are element-wise constant). `nu1` only gates the trivial case
/// and flags; the scaling lives in w.
ShapeDerivativeLoad assemble_dj1(const MeshLevel& level, const MaterialCoefficients& coeffs,
                                 const Eigen::VectorXd& u, const Eigen::VectorXd& w, double nu1,
                                 const LoadRestriction& restriction);

/// Volume form of the tracking derivative: time-summed (same rectangle rule
/// as the marches)
///   -k grad y^T (grad V + grad V^T) grad z + div(V)(w_n/dt * nu2/2 (y-ybar)^2
///   + ydot z + k grad y . grad z),
/// with ydot the backward difference. P1 x P1 products are integrated exactly
/// via element mass matrices so the load is the exact derivative of the
/// discrete tracking functional under mesh transport.
ShapeDerivativeLoad assemble_dj2(const MeshLevel& level, const MaterialCoefficients& coeffs,
                                 const TransientTrajectory& y, const TransientTrajectory& z,
                                 const std::vector<Eigen::VectorXd>& ybar,
                                 const TimeWeights& weights, double nu2,
                                 const LoadRestriction& restriction);

/// nu3 int_{Omega_out} div(V) dx.
ShapeDerivativeLoad assemble_dj3(const MeshLevel& level, double nu3,
                                 const LoadRestriction& restriction);

/// Surface form nu4 int kappa <V,n> ds with facet-midpoint quadrature and
/// vertex-averaged curvature.
ShapeDerivativeLoad assemble_dj4_surface(const MeshLevel& level, const CurvatureField& kappa,
                                         double nu4, const LoadRestriction& restriction);

/// Tangential-divergence form nu4 int div_Gamma(V) ds, integrated exactly for
/// P1 fields; identical to the exact gradient of the discrete perimeter.
ShapeDerivativeLoad assemble_dj4_volume(const MeshLevel& level, double nu4,
                                        const LoadRestriction& restriction);

/// Sum of loads on a shared dof layout.
ShapeDerivativeLoad combine_loads(const std::vector<ShapeDerivativeLoad>& loads);

/// Objective evaluator over a hierarchy (re-solves whatever states the
/// weights require).
using ObjectiveEvaluator = std::function<ObjectiveValue(const SimplicialMeshHierarchy&)>;

/// Perturbation-of-identity oracle (J(Omega_tV) - J(Omega)) / t with the
/// hierarchy deformed on all levels and states re-solved. Throws if t V
/// inverts an element (callers halve t).
double fd_directional_derivative(const ObjectiveEvaluator& evaluate,
                                 const SimplicialMeshHierarchy& h, const Eigen::VectorXd& v,
                                 double t);

/// Least-squares slope of log|fd(t) - assembled| vs log t; errors below
/// `floor` are clamped so exact matches read as high order.
double observed_taylor_order(const std::vector<double>& ts, const std::vector<double>& errors,
                             double floor = 1e-14);

}  // namespace shapemg
