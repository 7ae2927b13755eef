#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace shapemg {

/// Labels for the faces of the axis-aligned outer box. "front"/"back" only
/// occur in 3d (y-normal faces); "bottom"/"top" are y-normal in 2d and
/// z-normal in 3d.
enum class BoundaryLabel : int { bottom = 0, top = 1, left = 2, right = 3, front = 4, back = 5 };

const char* to_string(BoundaryLabel label);
BoundaryLabel boundary_label_from_string(const std::string& s);

/// Coordinate axis whose displacement component a sliding condition on this
/// face constrains (box faces are axis-aligned by construction).
int boundary_normal_axis(BoundaryLabel label, int dim);

/// One level of a simplicial mesh: triangles (d=2) or tetrahedra (d=3) with
/// subdomain labels, labeled outer-boundary facets and oriented interface
/// facets. Levels are immutable snapshots; all mutating operations return a
/// new level.
struct MeshLevel {
  int dim = 2;
  Eigen::MatrixXd coords;                      // nv x dim
  Eigen::MatrixXi simplices;                   // ne x (dim+1), positively oriented
  Eigen::VectorXi elem_subdomain;              // ne; 0 = out, i >= 1 = inclusion i
  Eigen::MatrixXi boundary_facets;             // nbf x dim
  std::vector<BoundaryLabel> boundary_labels;  // nbf
  // Interface facets are stored oriented: in 2d the edge (a,b) has outward
  // normal rot(b-a) = (t_y, -t_x); in 3d the triangle (a,b,c) has outward
  // normal (b-a)x(c-a). "Outward" means out of the inclusion.
  Eigen::MatrixXi interface_facets;            // nif x dim

  int num_vertices() const { return static_cast<int>(coords.rows()); }
  int num_elements() const { return static_cast<int>(simplices.rows()); }
  int num_boundary_facets() const { return static_cast<int>(boundary_facets.rows()); }
  int num_interface_facets() const { return static_cast<int>(interface_facets.rows()); }

  /// Signed volume (area in 2d) of element e; > 0 for a valid mesh.
  double element_volume(int e) const;
  /// Centroid of element e.
  Eigen::VectorXd element_centroid(int e) const;
  /// Measure (length/area) of the facet given by a row of a facet matrix.
  double facet_measure(const Eigen::MatrixXi& facets, int f) const;
  /// Unit normal of interface facet f in the stored orientation.
  Eigen::VectorXd interface_normal(int f) const;
  /// Midpoint of interface facet f.
  Eigen::VectorXd interface_midpoint(int f) const;

  double total_volume() const;
  double subdomain_volume(int label) const;
  double interface_measure() const;  // |Gamma_int|, sum over all inclusions

  /// Smallest edge length among edges incident to each vertex (used by the
  /// step-size safeguard). Vertices without elements get +inf.
  Eigen::VectorXd min_incident_edge_length() const;
  double mean_interface_edge_length() const;
};

/// Provenance of each fine vertex under one uniform refinement: vertices
/// copied from the coarse level have parent0 == parent1 == coarse index
/// (and the same fine index); edge midpoints record both edge endpoints.
struct RefinementMap {
  Eigen::VectorXi parent0;
  Eigen::VectorXi parent1;
};

/// Nested refinement levels, coarse to fine. Coarse vertex i occupies index i
/// on every finer level with identical coordinates (vertex nesting); this is
/// what lets a fine-level deformation be carried to all levels exactly.
struct SimplicialMeshHierarchy {
  std::vector<MeshLevel> levels;
  std::vector<RefinementMap> maps;  // maps[l] connects levels[l] -> levels[l+1]

  int num_levels() const { return static_cast<int>(levels.size()); }
  int dim() const { return levels.empty() ? 0 : levels.front().dim; }
  const MeshLevel& finest() const { return levels.back(); }
  const MeshLevel& coarsest() const { return levels.front(); }
};

/// Full conformity / labeling / orientation check. Throws std::runtime_error
/// with a diagnostic on the first violation.
void validate_mesh(const MeshLevel& level);

/// Regular (red) refinement: each triangle is split into 4 children, each
/// tetrahedron into 8 (Bey's rule); new vertices sit at edge midpoints and
/// coarse vertices keep their indices. All labels are inherited.
MeshLevel refine_uniform(const MeshLevel& level, RefinementMap* map = nullptr);

/// Refine `extra_levels` times starting from `coarse` (total levels =
/// extra_levels + 1), validating every level.
SimplicialMeshHierarchy build_hierarchy(const MeshLevel& coarse, int num_levels);

/// Move every finest vertex by scale*U and every coarser vertex by the value
/// of scale*U at its nested counterpart. Returns nullopt if any simplex on
/// any level loses positive orientation (step too large).
std::optional<SimplicialMeshHierarchy> try_deform_all_levels(const SimplicialMeshHierarchy& h,
                                                             const Eigen::VectorXd& u_finest,
                                                             double scale);

/// Throwing variant of try_deform_all_levels.
SimplicialMeshHierarchy deform_all_levels(const SimplicialMeshHierarchy& h,
                                          const Eigen::VectorXd& u_finest, double scale);

struct QualityReport {
  Eigen::VectorXd ratios;       // per-element circumradius / (d * inradius)
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  double mean_ratio = 0.0;
  std::vector<int> degenerate;  // indices reported as infinite
};

/// Aspect ratios normalized so the regular simplex scores exactly 1.
QualityReport mesh_quality(const MeshLevel& level);

/// Discrete mean curvature of the interface, nonzero only at interface
/// vertices. 2d: exterior turning angle over the average adjacent edge
/// length; 3d: cotangent mean-curvature-normal magnitude over the mixed
/// Voronoi area, signed by the stored interface orientation. Positive for a
/// convex inclusion.
struct CurvatureField {
  Eigen::VectorXd values;         // per vertex, 0 away from the interface
  std::vector<char> on_interface; // per vertex
  double max_abs() const;
};

CurvatureField discrete_mean_curvature(const MeshLevel& level);

/// Vertices lying on the interface.
std::vector<char> interface_vertex_mask(const MeshLevel& level);

/// Vertices on the outer boundary.
std::vector<char> boundary_vertex_mask(const MeshLevel& level);

}  // namespace shapemg
