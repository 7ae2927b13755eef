#pragma once

#include "shapemg/mesh.hpp"

#include <functional>

namespace shapemg {

/// Structured right-triangle mesh of [x0,x1]x[y0,y1] with nx x ny cells.
/// An optional axis-aligned inclusion is given as a cell-index box
/// [i0,i1) x [j0,j1) so the interface is resolved exactly by grid lines.
struct IndexBox {
  int i0 = 0, j0 = 0, k0 = 0;
  int i1 = 0, j1 = 0, k1 = 0;
  bool empty() const { return i1 <= i0 || j1 <= j0; }
};

MeshLevel make_structured_box(int nx, int ny, const Eigen::Vector2d& lo,
                              const Eigen::Vector2d& hi, const IndexBox& inclusion = {});

/// Structured Kuhn (6 tetrahedra per cube) mesh of a 3d box with an optional
/// cell-index-box inclusion.
MeshLevel make_structured_box3d(int nx, int ny, int nz, const Eigen::Vector3d& lo,
                                const Eigen::Vector3d& hi, const IndexBox& inclusion = {});

/// Ring ("O-grid") mesh of a square box around one star-shaped inclusion
/// centered at the box center. radii[i] is the interface distance from the
/// center in direction theta_i = 2*pi*i/n; n must be divisible by 8 so the
/// outermost ring hits the box corners exactly. rings_in triangulates the
/// inclusion (fan at the center plus rings), rings_out the exterior annulus.
MeshLevel make_ogrid_inclusion(const Eigen::Vector2d& lo, const Eigen::Vector2d& hi,
                               const Eigen::VectorXd& radii, int rings_in, int rings_out);

/// Interface radii for the canonical scenarios, sampled at theta_i = 2*pi*i/n.
Eigen::VectorXd circle_radii(int n, double radius);
/// rho(theta) = r0 * (1 + amplitude*cos(lobes*theta)).
Eigen::VectorXd star_radii(int n, double r0, double amplitude, int lobes);
/// Multi-frequency star rho(theta) = r0 * (1 + sum_m a_m cos(k_m theta)).
Eigen::VectorXd star_radii(int n, double r0, const std::vector<double>& amplitudes,
                           const std::vector<int>& lobes);
/// Circle of given radius centered at `center` relative to the box center
/// (center offset must keep the shape star-shaped about the box center).
Eigen::VectorXd offset_circle_radii(int n, double radius, const Eigen::Vector2d& center);

/// Hierarchy whose new interface vertices are projected onto the circle
/// |x - center| = radius after each refinement, so every level resolves the
/// same smooth curve (old vertices never move; nesting is preserved). Used by
/// the curvature study as the smooth control case.
SimplicialMeshHierarchy build_hierarchy_snapped_circle(const MeshLevel& coarse, int num_levels,
                                                       const Eigen::Vector2d& center,
                                                       double radius);

}  // namespace shapemg
