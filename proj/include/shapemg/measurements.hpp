#pragma once

#include "shapemg/shape_calculus.hpp"

#include <iosfwd>
#include <string>

namespace shapemg {

/// Gaussian radial basis field sum_j w_j exp(-eps^2 |x - c_j|^2). Evaluation
/// is mesh-independent, which is what lets measurement data follow the
/// optimization onto arbitrarily deformed meshes.
struct RbfField {
  Eigen::MatrixXd centers;  // n x d
  double epsilon = 1.0;     // shape parameter (1/length)
  Eigen::VectorXd weights;
  double fit_rms = 0.0;     // residual at the fit samples

  int dim() const { return static_cast<int>(centers.cols()); }
};

/// Regularized least-squares fit. `ridge` is relative to the largest diagonal
/// entry of the normal matrix; with ridge == 0 the system is solved by SVD
/// and rejected if its condition number exceeds 1e12.
RbfField fit_rbf(const Eigen::MatrixXd& sample_points, const Eigen::VectorXd& sample_values,
                 const Eigen::MatrixXd& centers, double epsilon, double ridge);

Eigen::VectorXd eval_rbf(const RbfField& field, const Eigen::MatrixXd& points);

/// Regular lattice of centers over a box, `per_axis` points per direction
/// placed at cell midpoints.
Eigen::MatrixXd lattice_centers(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                int per_axis);

/// Shape parameter making neighboring lattice Gaussians overlap at half
/// height: eps = sqrt(ln 2) / spacing.
double lattice_epsilon(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, int per_axis);

struct RbfFitSettings {
  int centers_per_axis = 12;
  double ridge = 1e-10;
  double epsilon = 0.0;  // 0: derive from the lattice spacing
};

/// Run the diffusion model on the target geometry, sample the nodal values at
/// the weighted measurement instants and fit one RBF field per instant
/// (ordered by step index).
std::vector<RbfField> synthesize_measurements(const SimplicialMeshHierarchy& target,
                                              const MaterialCoefficients& coeffs,
                                              const ObjectiveSpec& spec,
                                              const RbfFitSettings& fit,
                                              const SolverOptions& opts);

/// Measurement data for the tracking term: either nodal trajectories frozen
/// on the dof layout (they ride along with mesh deformation) or RBF fields
/// re-evaluated at the current node positions of every weighted instant.
struct MeasurementHandle {
  enum class Kind { none, nodal, rbf };
  Kind kind = Kind::none;
  std::vector<Eigen::VectorXd> nodal;  // full trajectory, aligned with the time grid
  std::vector<RbfField> rbf;           // one field per weighted instant, in step order

  /// Trajectory of ybar values aligned with the march (zeros at unweighted
  /// steps in rbf mode).
  std::vector<Eigen::VectorXd> realize(const MeshLevel& level, const TimeWeights& weights) const;

  static MeasurementHandle from_nodal(std::vector<Eigen::VectorXd> trajectory);
  static MeasurementHandle from_rbf(std::vector<RbfField> fields);
};

/// Plain-text field format: header "n eps", then n lines "c_x c_y [c_z] w",
/// full double precision; round-trips exactly.
void write_rbf(const RbfField& field, std::ostream& out);
RbfField read_rbf(std::istream& in, int dim);
void write_rbf_file(const RbfField& field, const std::string& path);
RbfField read_rbf_file(const std::string& path, int dim);

}  // namespace shapemg
