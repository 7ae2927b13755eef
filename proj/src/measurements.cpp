#include "shapemg/measurements.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace shapemg {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("measurements: " + msg); }

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centers,
                              double epsilon) {
  const Eigen::Index m = points.rows(), n = centers.rows();
  Eigen::MatrixXd a(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      a(i, j) = std::exp(-epsilon * epsilon * (points.row(i) - centers.row(j)).squaredNorm());
  return a;
}

}  // namespace

RbfField fit_rbf(const Eigen::MatrixXd& sample_points, const Eigen::VectorXd& sample_values,
                 const Eigen::MatrixXd& centers, double epsilon, double ridge) {
  if (sample_points.rows() != sample_values.size()) fail("sample point/value count mismatch");
  if (sample_points.cols() != centers.cols()) fail("sample/center dimension mismatch");
  if (ridge < 0.0) fail("ridge must be non-negative");
  if (epsilon <= 0.0) fail("shape parameter must be positive");
  for (Eigen::Index i = 0; i < centers.rows(); ++i)
    for (Eigen::Index j = i + 1; j < centers.rows(); ++j)
      if ((centers.row(i) - centers.row(j)).norm() == 0.0) fail("centers must be distinct");

  RbfField field;
  field.centers = centers;
  field.epsilon = epsilon;

  Eigen::MatrixXd a = kernel_matrix(sample_points, centers, epsilon);
  if (ridge == 0.0) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    double smax = svd.singularValues().maxCoeff();
    double smin = svd.singularValues().minCoeff();
    if (smin <= 0.0 || smax / smin > 1e12) {
      std::ostringstream os;
      os << "kernel matrix is ill-conditioned (condition "
         << (smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity())
         << "); pass a positive ridge";
      fail(os.str());
    }
    field.weights = svd.solve(sample_values);
  } else {
    Eigen::MatrixXd normal = a.transpose() * a;
    double shift = ridge * normal.diagonal().maxCoeff();
    normal.diagonal().array() += shift;
    Eigen::LLT<Eigen::MatrixXd> llt(normal);
    if (llt.info() != Eigen::Success) fail("normal equations are not positive definite");
    field.weights = llt.solve(a.transpose() * sample_values);
  }
  field.fit_rms = std::sqrt((a * field.weights - sample_values).squaredNorm() /
                            static_cast<double>(sample_values.size()));
  return field;
}

Eigen::VectorXd eval_rbf(const RbfField& field, const Eigen::MatrixXd& points) {
  if (points.cols() != field.centers.cols()) fail("evaluation point dimension mismatch");
  return kernel_matrix(points, field.centers, field.epsilon) * field.weights;
}

Eigen::MatrixXd lattice_centers(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                int per_axis) {
  const int d = static_cast<int>(lo.size());
  if (per_axis < 1) fail("lattice needs at least one center per axis");
  int total = 1;
  for (int c = 0; c < d; ++c) total *= per_axis;
  Eigen::MatrixXd centers(total, d);
  for (int idx = 0; idx < total; ++idx) {
    int rest = idx;
    for (int c = 0; c < d; ++c) {
      int i = rest % per_axis;
      rest /= per_axis;
      centers(idx, c) = lo[c] + (hi[c] - lo[c]) * (i + 0.5) / per_axis;
    }
  }
  return centers;
}

double lattice_epsilon(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, int per_axis) {
  double spacing = (hi - lo).maxCoeff() / per_axis;
  return std::sqrt(std::log(2.0)) / spacing;
}

std::vector<RbfField> synthesize_measurements(const SimplicialMeshHierarchy& target,
                                              const MaterialCoefficients& coeffs,
                                              const ObjectiveSpec& spec,
                                              const RbfFitSettings& fit,
                                              const SolverOptions& opts) {
  TimeWeights weights = spec.weights();
  TransientTrajectory y = march_diffusion_state(target, coeffs, spec.dt, spec.t_end, opts);

  const MeshLevel& level = target.finest();
  Eigen::VectorXd lo = level.coords.colwise().minCoeff();
  Eigen::VectorXd hi = level.coords.colwise().maxCoeff();
  Eigen::MatrixXd centers = lattice_centers(lo, hi, fit.centers_per_axis);
  double eps = fit.epsilon > 0.0 ? fit.epsilon : lattice_epsilon(lo, hi, fit.centers_per_axis);

  std::vector<RbfField> fields;
  for (int n = 1; n <= y.num_steps(); ++n) {
    if (weights.w[n] == 0.0) continue;
    fields.push_back(fit_rbf(level.coords, y.fields[n], centers, eps, fit.ridge));
  }
  return fields;
}

std::vector<Eigen::VectorXd> MeasurementHandle::realize(const MeshLevel& level,
                                                        const TimeWeights& weights) const {
  const int steps = static_cast<int>(weights.w.size()) - 1;
  if (kind == Kind::nodal) {
    if (static_cast<int>(nodal.size()) != steps + 1)
      fail("nodal measurement trajectory does not match the time grid");
    return nodal;
  }
  std::vector<Eigen::VectorXd> out(steps + 1, Eigen::VectorXd::Zero(level.num_vertices()));
  if (kind == Kind::none) return out;
  size_t next = 0;
  for (int n = 1; n <= steps; ++n) {
    if (weights.w[n] == 0.0) continue;
    if (next >= rbf.size()) fail("fewer RBF fields than weighted measurement instants");
    out[n] = eval_rbf(rbf[next++], level.coords);
  }
  if (next != rbf.size()) fail("more RBF fields than weighted measurement instants");
  return out;
}

MeasurementHandle MeasurementHandle::from_nodal(std::vector<Eigen::VectorXd> trajectory) {
  MeasurementHandle h;
  h.kind = Kind::nodal;
  h.nodal = std::move(trajectory);
  return h;
}

MeasurementHandle MeasurementHandle::from_rbf(std::vector<RbfField> fields) {
  MeasurementHandle h;
  h.kind = Kind::rbf;
  h.rbf = std::move(fields);
  return h;
}

void write_rbf(const RbfField& field, std::ostream& out) {
  char buf[32];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << field.centers.rows() << ' ' << fmt(field.epsilon) << '\n';
  for (Eigen::Index i = 0; i < field.centers.rows(); ++i) {
    for (Eigen::Index c = 0; c < field.centers.cols(); ++c) out << fmt(field.centers(i, c)) << ' ';
    out << fmt(field.weights[i]) << '\n';
  }
}

RbfField read_rbf(std::istream& in, int dim) {
  RbfField field;
  Eigen::Index n = 0;
  if (!(in >> n >> field.epsilon)) fail("bad RBF header");
  field.centers.resize(n, dim);
  field.weights.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < dim; ++c)
      if (!(in >> field.centers(i, c))) fail("truncated RBF centers");
    if (!(in >> field.weights[i])) fail("truncated RBF weights");
  }
  return field;
}

void write_rbf_file(const RbfField& field, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot open '" + path + "' for writing");
  write_rbf(field, out);
}

RbfField read_rbf_file(const std::string& path, int dim) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  return read_rbf(in, dim);
}

}  // namespace shapemg
