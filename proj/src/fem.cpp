#include "shapemg/fem.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace shapemg {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("fem: " + msg); }

using Triplet = Eigen::Triplet<double>;

}  // namespace

void MaterialCoefficients::validate(int dim) const {
  if (k_out <= 0.0 || k_int <= 0.0) fail("diffusivities must be positive");
  if (mu_out <= 0.0 || mu_int <= 0.0) fail("shear moduli must be positive");
  if (lambda_out + 2.0 * mu_out / dim <= 0.0 || lambda_int + 2.0 * mu_int / dim <= 0.0)
    fail("lambda + 2 mu / d must be positive (ellipticity)");
}

double SparseOperator::symmetry_error() const {
  SpMat diff = SpMat(m - SpMat(m.transpose()));
  double err = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SpMat::InnerIterator it(diff, k); it; ++it) err = std::max(err, std::abs(it.value()));
  return err;
}

const BoundaryCondition& BoundaryConditionSet::at(BoundaryLabel label) const {
  auto it = conditions.find(label);
  if (it == conditions.end())
    fail(std::string("missing boundary condition for label '") + to_string(label) + "'");
  return it->second;
}

std::vector<char> Constraints::mask() const {
  std::vector<char> out(n, 0);
  for (int d : dofs) out[d] = 1;
  return out;
}

SparseOperator eliminate_constraints(const SparseOperator& raw, const Constraints& c) {
  std::vector<char> constrained = c.mask();
  std::vector<Triplet> trips;
  trips.reserve(raw.m.nonZeros());
  for (int k = 0; k < raw.m.outerSize(); ++k)
    for (SpMat::InnerIterator it(raw.m, k); it; ++it) {
      int i = static_cast<int>(it.row()), j = static_cast<int>(it.col());
      if (!constrained[i] && !constrained[j]) trips.emplace_back(i, j, it.value());
    }
  for (int d : c.dofs) trips.emplace_back(d, d, 1.0);
  SparseOperator out;
  out.m.resize(raw.rows(), raw.rows());
  out.m.setFromTriplets(trips.begin(), trips.end());
  return out;
}

Eigen::VectorXd constrain_rhs(const SparseOperator& raw, const Constraints& c,
                              const Eigen::VectorXd& rhs) {
  Eigen::VectorXd out = rhs;
  std::vector<char> constrained = c.mask();
  // out_free -= A(:, constrained) * values; by symmetry iterate constrained rows.
  for (size_t k = 0; k < c.dofs.size(); ++k) {
    int d = c.dofs[k];
    double v = c.values[static_cast<Eigen::Index>(k)];
    if (v != 0.0)
      for (SpMat::InnerIterator it(raw.m, d); it; ++it)
        if (!constrained[it.col()]) out[it.col()] -= it.value() * v;
  }
  for (size_t k = 0; k < c.dofs.size(); ++k) out[c.dofs[k]] = c.values[static_cast<Eigen::Index>(k)];
  return out;
}

void element_basis_gradients(const MeshLevel& level, int e, Eigen::MatrixXd& grads,
                             double& volume) {
  const int d = level.dim;
  Eigen::MatrixXd edges(d, d);
  for (int i = 0; i < d; ++i)
    edges.col(i) =
        (level.coords.row(level.simplices(e, i + 1)) - level.coords.row(level.simplices(e, 0)))
            .transpose();
  double det = edges.determinant();
  volume = det / (d == 2 ? 2.0 : 6.0);
  Eigen::MatrixXd inv = edges.inverse();
  grads.resize(d, d + 1);
  // grad lambda_i (i >= 1) is row i-1 of edges^{-1}; lambda_0 closes the sum.
  for (int i = 1; i <= d; ++i) grads.col(i) = inv.row(i - 1).transpose();
  grads.col(0) = -grads.rightCols(d).rowwise().sum();
}

Eigen::MatrixXd element_mass_matrix(const MeshLevel& level, int e) {
  const int d = level.dim;
  double vol = level.element_volume(e);
  double scale = vol / ((d + 1.0) * (d + 2.0));
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(d + 1, d + 1, scale);
  m.diagonal().array() *= 2.0;
  return m;
}

namespace {

// Validates that every boundary label in the mesh has a condition and
// collects facet lists per label.
std::map<BoundaryLabel, std::vector<int>> facets_by_label(const MeshLevel& level,
                                                          const BoundaryConditionSet& bcs) {
  std::map<BoundaryLabel, std::vector<int>> by_label;
  for (int f = 0; f < level.num_boundary_facets(); ++f)
    by_label[level.boundary_labels[f]].push_back(f);
  for (auto& [label, facets] : by_label)
    if (!bcs.has(label))
      fail(std::string("missing boundary condition for label '") + to_string(label) + "'");
  return by_label;
}

int facet_normal_axis_checked(const MeshLevel& level, int f, BoundaryLabel label) {
  const int d = level.dim;
  int axis = boundary_normal_axis(label, d);
  double tol = 1e-9;
  double ref = level.coords(level.boundary_facets(f, 0), axis);
  for (int i = 1; i < d; ++i)
    if (std::abs(level.coords(level.boundary_facets(f, i), axis) - ref) > tol)
      fail("outer facet is not axis-aligned; sliding conditions need a box-aligned boundary");
  return axis;
}

Constraints finalize_constraints(int n, std::map<int, double>& fixed) {
  Constraints c;
  c.n = n;
  c.dofs.reserve(fixed.size());
  c.values.resize(static_cast<Eigen::Index>(fixed.size()));
  int k = 0;
  for (auto& [dof, value] : fixed) {
    c.dofs.push_back(dof);
    c.values[k++] = value;
  }
  return c;
}

}  // namespace

ElasticitySystem assemble_elasticity(const MeshLevel& level, const MaterialCoefficients& coeffs,
                                     const BoundaryConditionSet& bcs) {
  const int d = level.dim;
  coeffs.validate(d);
  const int n = level.num_vertices() * d;
  auto by_label = facets_by_label(level, bcs);

  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(level.num_elements()) * (d + 1) * (d + 1) * d * d);
  Eigen::MatrixXd grads;
  double vol;
  for (int e = 0; e < level.num_elements(); ++e) {
    element_basis_gradients(level, e, grads, vol);
    const double lam = coeffs.lambda(level.elem_subdomain[e]);
    const double mu = coeffs.mu(level.elem_subdomain[e]);
    for (int i = 0; i <= d; ++i)
      for (int j = 0; j <= d; ++j) {
        double gdot = grads.col(i).dot(grads.col(j));
        for (int c = 0; c < d; ++c)
          for (int f = 0; f < d; ++f) {
            double v = lam * grads(c, i) * grads(f, j) + mu * grads(f, i) * grads(c, j);
            if (c == f) v += mu * gdot;
            trips.emplace_back(level.simplices(e, i) * d + c, level.simplices(e, j) * d + f,
                               vol * v);
          }
      }
  }

  ElasticitySystem sys;
  sys.raw.m.resize(n, n);
  sys.raw.m.setFromTriplets(trips.begin(), trips.end());

  sys.load = Eigen::VectorXd::Zero(n);
  std::map<int, double> fixed;
  for (auto& [label, facets] : by_label) {
    const BoundaryCondition& bc = bcs.at(label);
    if (bc.kind == BcKind::neumann) {
      if (bc.value.size() != d) fail("elastic Neumann traction must be a d-vector");
      if (bc.value.isZero()) continue;
      for (int f : facets) {
        double w = level.facet_measure(level.boundary_facets, f) / d;
        for (int i = 0; i < d; ++i)
          for (int c = 0; c < d; ++c)
            sys.load[level.boundary_facets(f, i) * d + c] += w * bc.value[c];
      }
    } else if (bc.kind == BcKind::dirichlet) {
      if (bc.value.size() != d) fail("elastic Dirichlet value must be a d-vector");
      for (int f : facets)
        for (int i = 0; i < d; ++i)
          for (int c = 0; c < d; ++c) fixed[level.boundary_facets(f, i) * d + c] = bc.value[c];
    } else {
      for (int f : facets) {
        int axis = facet_normal_axis_checked(level, f, label);
        for (int i = 0; i < d; ++i) fixed[level.boundary_facets(f, i) * d + axis] = 0.0;
      }
    }
  }

  sys.bc = finalize_constraints(n, fixed);
  sys.load = constrain_rhs(sys.raw, sys.bc, sys.load);
  sys.constrained = eliminate_constraints(sys.raw, sys.bc);
  return sys;
}

DiffusionSystem assemble_diffusion(const MeshLevel& level, const MaterialCoefficients& coeffs,
                                   const BoundaryConditionSet& bcs) {
  const int d = level.dim;
  coeffs.validate(d);
  const int n = level.num_vertices();
  auto by_label = facets_by_label(level, bcs);

  std::vector<Triplet> kt, mt;
  Eigen::MatrixXd grads;
  double vol;
  for (int e = 0; e < level.num_elements(); ++e) {
    element_basis_gradients(level, e, grads, vol);
    const double k = coeffs.k(level.elem_subdomain[e]);
    Eigen::MatrixXd mass = element_mass_matrix(level, e);
    for (int i = 0; i <= d; ++i)
      for (int j = 0; j <= d; ++j) {
        kt.emplace_back(level.simplices(e, i), level.simplices(e, j),
                        k * vol * grads.col(i).dot(grads.col(j)));
        mt.emplace_back(level.simplices(e, i), level.simplices(e, j), mass(i, j));
      }
  }

  DiffusionSystem sys;
  sys.stiffness_raw.m.resize(n, n);
  sys.stiffness_raw.m.setFromTriplets(kt.begin(), kt.end());
  sys.mass_raw.m.resize(n, n);
  sys.mass_raw.m.setFromTriplets(mt.begin(), mt.end());

  sys.load = Eigen::VectorXd::Zero(n);
  std::map<int, double> fixed;
  for (auto& [label, facets] : by_label) {
    const BoundaryCondition& bc = bcs.at(label);
    if (bc.kind == BcKind::neumann) {
      if (bc.value.size() != 1) fail("diffusion Neumann flux must be scalar");
      if (bc.value[0] == 0.0) continue;
      for (int f : facets) {
        double w = level.facet_measure(level.boundary_facets, f) / d;
        for (int i = 0; i < d; ++i) sys.load[level.boundary_facets(f, i)] += w * bc.value[0];
      }
    } else if (bc.kind == BcKind::dirichlet) {
      if (bc.value.size() != 1) fail("diffusion Dirichlet value must be scalar");
      for (int f : facets)
        for (int i = 0; i < d; ++i) fixed[level.boundary_facets(f, i)] = bc.value[0];
    } else {
      fail("sliding conditions apply to vector-valued problems only");
    }
  }
  sys.bc = finalize_constraints(n, fixed);
  return sys;
}

Constraints sliding_constraints(const MeshLevel& level) {
  const int d = level.dim;
  std::map<int, double> fixed;
  for (int f = 0; f < level.num_boundary_facets(); ++f) {
    int axis = facet_normal_axis_checked(level, f, level.boundary_labels[f]);
    for (int i = 0; i < d; ++i) fixed[level.boundary_facets(f, i) * d + axis] = 0.0;
  }
  return finalize_constraints(level.num_vertices() * d, fixed);
}

BoundaryConditionSet all_sliding_bcs(int dim) {
  BoundaryConditionSet bcs;
  std::vector<BoundaryLabel> labels = {BoundaryLabel::bottom, BoundaryLabel::top,
                                       BoundaryLabel::left, BoundaryLabel::right};
  if (dim == 3) {
    labels.push_back(BoundaryLabel::front);
    labels.push_back(BoundaryLabel::back);
  }
  for (auto l : labels) bcs.conditions[l] = BoundaryCondition::sliding();
  return bcs;
}

SpMat p1_prolongation(const RefinementMap& map, int components) {
  const int nf = static_cast<int>(map.parent0.size());
  int nc = 0;
  for (int v = 0; v < nf; ++v)
    nc = std::max({nc, map.parent0[v] + 1, map.parent1[v] + 1});
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(nf) * 2 * components);
  for (int v = 0; v < nf; ++v)
    for (int c = 0; c < components; ++c) {
      if (map.parent0[v] == map.parent1[v]) {
        trips.emplace_back(v * components + c, map.parent0[v] * components + c, 1.0);
      } else {
        trips.emplace_back(v * components + c, map.parent0[v] * components + c, 0.5);
        trips.emplace_back(v * components + c, map.parent1[v] * components + c, 0.5);
      }
    }
  SpMat p(nf * components, nc * components);
  p.setFromTriplets(trips.begin(), trips.end());
  return p;
}

}  // namespace shapemg
