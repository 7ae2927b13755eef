#include "shapemg/generators.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace shapemg {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("generators: " + msg); }

void snap(double& x, double target, double tol) {
  if (std::abs(x - target) < tol) x = target;
}

}  // namespace

MeshLevel make_structured_box(int nx, int ny, const Eigen::Vector2d& lo, const Eigen::Vector2d& hi,
                              const IndexBox& box) {
  if (nx < 1 || ny < 1) fail("structured box needs at least one cell per direction");
  if ((hi - lo).minCoeff() <= 0.0) fail("box extents must be positive");
  if (!box.empty() && (box.i0 <= 0 || box.j0 <= 0 || box.i1 >= nx || box.j1 >= ny))
    fail("inclusion index box must be strictly interior");

  MeshLevel m;
  m.dim = 2;
  const double hx = (hi.x() - lo.x()) / nx, hy = (hi.y() - lo.y()) / ny;
  auto vid = [&](int i, int j) { return j * (nx + 1) + i; };

  m.coords.resize((nx + 1) * (ny + 1), 2);
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      m.coords.row(vid(i, j)) << lo.x() + i * hx, lo.y() + j * hy;

  auto in_box = [&](int i, int j) {
    return !box.empty() && i >= box.i0 && i < box.i1 && j >= box.j0 && j < box.j1;
  };

  m.simplices.resize(2 * nx * ny, 3);
  m.elem_subdomain.resize(2 * nx * ny);
  int e = 0;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      int sub = in_box(i, j) ? 1 : 0;
      m.simplices.row(e) << a, b, c;
      m.elem_subdomain[e++] = sub;
      m.simplices.row(e) << a, c, d;
      m.elem_subdomain[e++] = sub;
    }

  std::vector<std::array<int, 2>> bf;
  std::vector<BoundaryLabel> bl;
  for (int i = 0; i < nx; ++i) {
    bf.push_back({vid(i, 0), vid(i + 1, 0)});
    bl.push_back(BoundaryLabel::bottom);
    bf.push_back({vid(i, ny), vid(i + 1, ny)});
    bl.push_back(BoundaryLabel::top);
  }
  for (int j = 0; j < ny; ++j) {
    bf.push_back({vid(0, j), vid(0, j + 1)});
    bl.push_back(BoundaryLabel::left);
    bf.push_back({vid(nx, j), vid(nx, j + 1)});
    bl.push_back(BoundaryLabel::right);
  }
  m.boundary_facets.resize(bf.size(), 2);
  for (size_t f = 0; f < bf.size(); ++f) m.boundary_facets.row(f) << bf[f][0], bf[f][1];
  m.boundary_labels = bl;

  // Interface edges walk the inclusion counterclockwise so the stored
  // orientation has the outward normal.
  std::vector<std::array<int, 2>> ifc;
  if (!box.empty()) {
    for (int i = box.i0; i < box.i1; ++i) ifc.push_back({vid(i, box.j0), vid(i + 1, box.j0)});
    for (int j = box.j0; j < box.j1; ++j) ifc.push_back({vid(box.i1, j), vid(box.i1, j + 1)});
    for (int i = box.i1; i > box.i0; --i) ifc.push_back({vid(i, box.j1), vid(i - 1, box.j1)});
    for (int j = box.j1; j > box.j0; --j) ifc.push_back({vid(box.i0, j), vid(box.i0, j - 1)});
  }
  m.interface_facets.resize(ifc.size(), 2);
  for (size_t f = 0; f < ifc.size(); ++f) m.interface_facets.row(f) << ifc[f][0], ifc[f][1];

  validate_mesh(m);
  return m;
}

MeshLevel make_structured_box3d(int nx, int ny, int nz, const Eigen::Vector3d& lo,
                                const Eigen::Vector3d& hi, const IndexBox& box) {
  if (nx < 1 || ny < 1 || nz < 1) fail("structured box needs at least one cell per direction");
  bool has_box = !(box.i1 <= box.i0 || box.j1 <= box.j0 || box.k1 <= box.k0);
  if (has_box && (box.i0 <= 0 || box.j0 <= 0 || box.k0 <= 0 || box.i1 >= nx || box.j1 >= ny ||
                  box.k1 >= nz))
    fail("inclusion index box must be strictly interior");

  MeshLevel m;
  m.dim = 3;
  const Eigen::Vector3d h = (hi - lo).cwiseQuotient(Eigen::Vector3d(nx, ny, nz));
  auto vid = [&](int i, int j, int k) { return (k * (ny + 1) + j) * (nx + 1) + i; };
  m.coords.resize((nx + 1) * (ny + 1) * (nz + 1), 3);
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i)
        m.coords.row(vid(i, j, k)) << lo.x() + i * h.x(), lo.y() + j * h.y(), lo.z() + k * h.z();

  auto in_box = [&](int i, int j, int k) {
    return has_box && i >= box.i0 && i < box.i1 && j >= box.j0 && j < box.j1 && k >= box.k0 &&
           k < box.k1;
  };

  // Kuhn decomposition: 6 tetrahedra per cube, one per axis permutation, all
  // sharing the main diagonal; faces split along the min-to-max corner
  // diagonal on every cube face, so neighboring cubes conform.
  const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  m.simplices.resize(6 * nx * ny * nz, 4);
  m.elem_subdomain.resize(6 * nx * ny * nz);
  int e = 0;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        int sub = in_box(i, j, k) ? 1 : 0;
        for (auto& p : perms) {
          int idx[3] = {i, j, k};
          int tet[4];
          tet[0] = vid(i, j, k);
          for (int s = 0; s < 3; ++s) {
            idx[p[s]] += 1;
            tet[s + 1] = vid(idx[0], idx[1], idx[2]);
          }
          m.simplices.row(e) << tet[0], tet[1], tet[2], tet[3];
          m.elem_subdomain[e] = sub;
          ++e;
        }
      }
  // Fix orientation: odd permutations produce negative volume.
  for (int t = 0; t < m.num_elements(); ++t)
    if (m.element_volume(t) < 0.0) std::swap(m.simplices(t, 2), m.simplices(t, 3));

  // Quad face helper: corners in cyclic order; split along min->max diagonal;
  // wind so the normal points along `outward`.
  std::vector<std::array<int, 3>> bf, ifc;
  std::vector<BoundaryLabel> bl;
  auto add_quad = [&](std::array<int, 4> q, const Eigen::Vector3d& outward,
                      std::vector<std::array<int, 3>>& sink) {
    // Rotate so q[0] is the min-sum corner; the diagonal q[0]-q[2] is then
    // the min->max diagonal used by the Kuhn tetrahedra.
    int best = 0;
    for (int i = 1; i < 4; ++i)
      if (q[i] < q[best]) best = i;
    std::array<int, 4> r;
    for (int i = 0; i < 4; ++i) r[i] = q[(best + i) % 4];
    for (std::array<int, 3> tri : {std::array<int, 3>{r[0], r[1], r[2]},
                                   std::array<int, 3>{r[0], r[2], r[3]}}) {
      Eigen::Vector3d a = m.coords.row(tri[0]), b = m.coords.row(tri[1]), c = m.coords.row(tri[2]);
      if ((b - a).cross(c - a).dot(outward) < 0.0) std::swap(tri[1], tri[2]);
      sink.push_back(tri);
    }
  };

  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j) {
      add_quad({vid(0, j, k), vid(0, j + 1, k), vid(0, j + 1, k + 1), vid(0, j, k + 1)},
               {-1, 0, 0}, bf);
      bl.push_back(BoundaryLabel::left);
      bl.push_back(BoundaryLabel::left);
      add_quad({vid(nx, j, k), vid(nx, j + 1, k), vid(nx, j + 1, k + 1), vid(nx, j, k + 1)},
               {1, 0, 0}, bf);
      bl.push_back(BoundaryLabel::right);
      bl.push_back(BoundaryLabel::right);
    }
  for (int k = 0; k < nz; ++k)
    for (int i = 0; i < nx; ++i) {
      add_quad({vid(i, 0, k), vid(i + 1, 0, k), vid(i + 1, 0, k + 1), vid(i, 0, k + 1)},
               {0, -1, 0}, bf);
      bl.push_back(BoundaryLabel::front);
      bl.push_back(BoundaryLabel::front);
      add_quad({vid(i, ny, k), vid(i + 1, ny, k), vid(i + 1, ny, k + 1), vid(i, ny, k + 1)},
               {0, 1, 0}, bf);
      bl.push_back(BoundaryLabel::back);
      bl.push_back(BoundaryLabel::back);
    }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      add_quad({vid(i, j, 0), vid(i + 1, j, 0), vid(i + 1, j + 1, 0), vid(i, j + 1, 0)},
               {0, 0, -1}, bf);
      bl.push_back(BoundaryLabel::bottom);
      bl.push_back(BoundaryLabel::bottom);
      add_quad({vid(i, j, nz), vid(i + 1, j, nz), vid(i + 1, j + 1, nz), vid(i, j + 1, nz)},
               {0, 0, 1}, bf);
      bl.push_back(BoundaryLabel::top);
      bl.push_back(BoundaryLabel::top);
    }

  if (has_box) {
    for (int k = box.k0; k < box.k1; ++k)
      for (int j = box.j0; j < box.j1; ++j) {
        add_quad({vid(box.i0, j, k), vid(box.i0, j + 1, k), vid(box.i0, j + 1, k + 1),
                  vid(box.i0, j, k + 1)},
                 {-1, 0, 0}, ifc);
        add_quad({vid(box.i1, j, k), vid(box.i1, j + 1, k), vid(box.i1, j + 1, k + 1),
                  vid(box.i1, j, k + 1)},
                 {1, 0, 0}, ifc);
      }
    for (int k = box.k0; k < box.k1; ++k)
      for (int i = box.i0; i < box.i1; ++i) {
        add_quad({vid(i, box.j0, k), vid(i + 1, box.j0, k), vid(i + 1, box.j0, k + 1),
                  vid(i, box.j0, k + 1)},
                 {0, -1, 0}, ifc);
        add_quad({vid(i, box.j1, k), vid(i + 1, box.j1, k), vid(i + 1, box.j1, k + 1),
                  vid(i, box.j1, k + 1)},
                 {0, 1, 0}, ifc);
      }
    for (int j = box.j0; j < box.j1; ++j)
      for (int i = box.i0; i < box.i1; ++i) {
        add_quad({vid(i, j, box.k0), vid(i + 1, j, box.k0), vid(i + 1, j + 1, box.k0),
                  vid(i, j + 1, box.k0)},
                 {0, 0, -1}, ifc);
        add_quad({vid(i, j, box.k1), vid(i + 1, j, box.k1), vid(i + 1, j + 1, box.k1),
                  vid(i, j + 1, box.k1)},
                 {0, 0, 1}, ifc);
      }
  }

  m.boundary_facets.resize(bf.size(), 3);
  for (size_t f = 0; f < bf.size(); ++f)
    m.boundary_facets.row(f) << bf[f][0], bf[f][1], bf[f][2];
  m.boundary_labels = bl;
  m.interface_facets.resize(ifc.size(), 3);
  for (size_t f = 0; f < ifc.size(); ++f)
    m.interface_facets.row(f) << ifc[f][0], ifc[f][1], ifc[f][2];

  validate_mesh(m);
  return m;
}

MeshLevel make_ogrid_inclusion(const Eigen::Vector2d& lo, const Eigen::Vector2d& hi,
                               const Eigen::VectorXd& radii, int rings_in, int rings_out) {
  const int n = static_cast<int>(radii.size());
  if (n < 8 || n % 8 != 0) fail("o-grid needs a direction count divisible by 8");
  if (rings_in < 1 || rings_out < 1) fail("o-grid needs at least one ring on each side");
  const double side = hi.x() - lo.x();
  if (std::abs((hi.y() - lo.y()) - side) > 1e-12 * side) fail("o-grid box must be square");
  const Eigen::Vector2d center = 0.5 * (lo + hi);
  const double half = 0.5 * side;
  if (radii.minCoeff() <= 0.0 || radii.maxCoeff() >= half) fail("radii must lie inside the box");

  MeshLevel m;
  m.dim = 2;
  const int nv = 1 + (rings_in + rings_out) * n;
  m.coords.resize(nv, 2);
  m.coords.row(0) = center;

  std::vector<Eigen::Vector2d> dir(n), boundary_pt(n);
  for (int i = 0; i < n; ++i) {
    double th = 2.0 * M_PI * i / n;
    dir[i] = Eigen::Vector2d(std::cos(th), std::sin(th));
    double r_box = half / std::max(std::abs(dir[i].x()), std::abs(dir[i].y()));
    boundary_pt[i] = center + r_box * dir[i];
    snap(boundary_pt[i].x(), lo.x(), 1e-12 * side);
    snap(boundary_pt[i].x(), hi.x(), 1e-12 * side);
    snap(boundary_pt[i].y(), lo.y(), 1e-12 * side);
    snap(boundary_pt[i].y(), hi.y(), 1e-12 * side);
  }

  // Ring layout: rings 1..rings_in grow from the center to the interface,
  // rings rings_in+1..rings_in+rings_out from the interface to the box.
  auto ring_vid = [&](int ring, int i) { return 1 + (ring - 1) * n + (i % n); };
  for (int ring = 1; ring <= rings_in; ++ring) {
    double s = static_cast<double>(ring) / rings_in;
    for (int i = 0; i < n; ++i) m.coords.row(ring_vid(ring, i)) = center + s * radii[i] * dir[i];
  }
  for (int ring = 1; ring <= rings_out; ++ring) {
    double s = static_cast<double>(ring) / rings_out;
    for (int i = 0; i < n; ++i) {
      Eigen::Vector2d p = center + radii[i] * dir[i];
      m.coords.row(ring_vid(rings_in + ring, i)) = p + s * (boundary_pt[i] - p);
    }
  }

  const int total_rings = rings_in + rings_out;
  std::vector<std::array<int, 3>> tris;
  std::vector<int> sub;
  for (int i = 0; i < n; ++i) {
    tris.push_back({0, ring_vid(1, i), ring_vid(1, i + 1)});
    sub.push_back(1);
  }
  for (int ring = 1; ring < total_rings; ++ring)
    for (int i = 0; i < n; ++i) {
      int a = ring_vid(ring, i), b = ring_vid(ring, i + 1);
      int c = ring_vid(ring + 1, i), d = ring_vid(ring + 1, i + 1);
      int s = ring < rings_in ? 1 : 0;
      tris.push_back({a, c, d});
      tris.push_back({a, d, b});
      sub.push_back(s);
      sub.push_back(s);
    }
  m.simplices.resize(tris.size(), 3);
  m.elem_subdomain.resize(tris.size());
  for (size_t t = 0; t < tris.size(); ++t) {
    m.simplices.row(t) << tris[t][0], tris[t][1], tris[t][2];
    m.elem_subdomain[t] = sub[t];
  }

  m.interface_facets.resize(n, 2);
  for (int i = 0; i < n; ++i)
    m.interface_facets.row(i) << ring_vid(rings_in, i), ring_vid(rings_in, i + 1);

  m.boundary_facets.resize(n, 2);
  m.boundary_labels.resize(n);
  for (int i = 0; i < n; ++i) {
    int a = ring_vid(total_rings, i), b = ring_vid(total_rings, i + 1);
    m.boundary_facets.row(i) << a, b;
    Eigen::Vector2d mid = 0.5 * (m.coords.row(a) + m.coords.row(b));
    double tol = 1e-9 * side;
    if (std::abs(mid.y() - lo.y()) < tol) m.boundary_labels[i] = BoundaryLabel::bottom;
    else if (std::abs(mid.y() - hi.y()) < tol) m.boundary_labels[i] = BoundaryLabel::top;
    else if (std::abs(mid.x() - lo.x()) < tol) m.boundary_labels[i] = BoundaryLabel::left;
    else if (std::abs(mid.x() - hi.x()) < tol) m.boundary_labels[i] = BoundaryLabel::right;
    else fail("o-grid boundary edge does not lie on a box side");
  }

  validate_mesh(m);
  return m;
}

Eigen::VectorXd circle_radii(int n, double radius) {
  return Eigen::VectorXd::Constant(n, radius);
}

Eigen::VectorXd star_radii(int n, double r0, double amplitude, int lobes) {
  return star_radii(n, r0, std::vector<double>{amplitude}, std::vector<int>{lobes});
}

Eigen::VectorXd star_radii(int n, double r0, const std::vector<double>& amplitudes,
                           const std::vector<int>& lobes) {
  if (amplitudes.size() != lobes.size()) fail("star modes need one amplitude per lobe count");
  Eigen::VectorXd r(n);
  for (int i = 0; i < n; ++i) {
    double th = 2.0 * M_PI * i / n;
    double rho = 1.0;
    for (size_t m = 0; m < amplitudes.size(); ++m) rho += amplitudes[m] * std::cos(lobes[m] * th);
    r[i] = r0 * rho;
  }
  return r;
}

Eigen::VectorXd offset_circle_radii(int n, double radius, const Eigen::Vector2d& center) {
  if (center.norm() >= radius) fail("offset circle must surround the box center");
  Eigen::VectorXd r(n);
  for (int i = 0; i < n; ++i) {
    double th = 2.0 * M_PI * i / n;
    Eigen::Vector2d d(std::cos(th), std::sin(th));
    double p = d.dot(center);
    r[i] = p + std::sqrt(p * p - center.squaredNorm() + radius * radius);
  }
  return r;
}

SimplicialMeshHierarchy build_hierarchy_snapped_circle(const MeshLevel& coarse, int num_levels,
                                                       const Eigen::Vector2d& center,
                                                       double radius) {
  if (coarse.dim != 2) fail("circle snapping is a 2d feature");
  SimplicialMeshHierarchy h;
  h.levels.push_back(coarse);
  validate_mesh(coarse);
  for (int l = 1; l < num_levels; ++l) {
    RefinementMap map;
    MeshLevel fine = refine_uniform(h.levels.back(), &map);
    const int old_nv = h.levels.back().num_vertices();
    std::vector<char> on_ifc = interface_vertex_mask(fine);
    for (int v = old_nv; v < fine.num_vertices(); ++v) {
      if (!on_ifc[v]) continue;
      Eigen::Vector2d x = fine.coords.row(v);
      fine.coords.row(v) = center + radius * (x - center).normalized();
    }
    validate_mesh(fine);
    h.levels.push_back(std::move(fine));
    h.maps.push_back(std::move(map));
  }
  return h;
}

}  // namespace shapemg
