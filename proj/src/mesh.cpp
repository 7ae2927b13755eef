#include "shapemg/mesh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace shapemg {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("mesh: " + msg); }

// Canonical (sorted) facet key for incidence maps.
std::array<int, 3> facet_key(const Eigen::MatrixXi& facets, int f, int dim) {
  std::array<int, 3> k{-1, -1, -1};
  for (int i = 0; i < dim; ++i) k[i] = facets(f, i);
  std::sort(k.begin(), k.begin() + dim);
  return k;
}

std::array<int, 3> facet_key(std::array<int, 3> k, int dim) {
  std::sort(k.begin(), k.begin() + dim);
  return k;
}

// The d+1 facets of simplex e, each as the vertex set opposite one vertex.
std::vector<std::array<int, 3>> element_facets(const MeshLevel& m, int e) {
  std::vector<std::array<int, 3>> out;
  const int d = m.dim;
  for (int skip = 0; skip <= d; ++skip) {
    std::array<int, 3> f{-1, -1, -1};
    int j = 0;
    for (int i = 0; i <= d; ++i)
      if (i != skip) f[j++] = m.simplices(e, i);
    out.push_back(f);
  }
  return out;
}

double signed_volume(const Eigen::MatrixXd& coords, const Eigen::MatrixXi& simplices, int e,
                     int dim) {
  Eigen::MatrixXd edges(dim, dim);
  for (int i = 0; i < dim; ++i)
    edges.col(i) = (coords.row(simplices(e, i + 1)) - coords.row(simplices(e, 0))).transpose();
  double factor = (dim == 2) ? 2.0 : 6.0;
  return edges.determinant() / factor;
}

}  // namespace

const char* to_string(BoundaryLabel label) {
  switch (label) {
    case BoundaryLabel::bottom: return "bottom";
    case BoundaryLabel::top: return "top";
    case BoundaryLabel::left: return "left";
    case BoundaryLabel::right: return "right";
    case BoundaryLabel::front: return "front";
    case BoundaryLabel::back: return "back";
  }
  return "?";
}

BoundaryLabel boundary_label_from_string(const std::string& s) {
  for (BoundaryLabel l : {BoundaryLabel::bottom, BoundaryLabel::top, BoundaryLabel::left,
                          BoundaryLabel::right, BoundaryLabel::front, BoundaryLabel::back})
    if (s == to_string(l)) return l;
  fail("unknown boundary label '" + s + "'");
}

int boundary_normal_axis(BoundaryLabel label, int dim) {
  switch (label) {
    case BoundaryLabel::left:
    case BoundaryLabel::right: return 0;
    case BoundaryLabel::front:
    case BoundaryLabel::back: return 1;
    case BoundaryLabel::bottom:
    case BoundaryLabel::top: return dim - 1;
  }
  return -1;
}

double MeshLevel::element_volume(int e) const { return signed_volume(coords, simplices, e, dim); }

Eigen::VectorXd MeshLevel::element_centroid(int e) const {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(dim);
  for (int i = 0; i <= dim; ++i) c += coords.row(simplices(e, i)).transpose();
  return c / (dim + 1);
}

double MeshLevel::facet_measure(const Eigen::MatrixXi& facets, int f) const {
  if (dim == 2) {
    return (coords.row(facets(f, 1)) - coords.row(facets(f, 0))).norm();
  }
  Eigen::Vector3d a = coords.row(facets(f, 0));
  Eigen::Vector3d b = coords.row(facets(f, 1));
  Eigen::Vector3d c = coords.row(facets(f, 2));
  return 0.5 * (b - a).cross(c - a).norm();
}

Eigen::VectorXd MeshLevel::interface_normal(int f) const {
  if (dim == 2) {
    Eigen::Vector2d t = coords.row(interface_facets(f, 1)) - coords.row(interface_facets(f, 0));
    Eigen::Vector2d n(t.y(), -t.x());
    return n.normalized();
  }
  Eigen::Vector3d a = coords.row(interface_facets(f, 0));
  Eigen::Vector3d b = coords.row(interface_facets(f, 1));
  Eigen::Vector3d c = coords.row(interface_facets(f, 2));
  return (b - a).cross(c - a).normalized();
}

Eigen::VectorXd MeshLevel::interface_midpoint(int f) const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(dim);
  for (int i = 0; i < dim; ++i) m += coords.row(interface_facets(f, i)).transpose();
  return m / dim;
}

double MeshLevel::total_volume() const {
  double v = 0.0;
  for (int e = 0; e < num_elements(); ++e) v += element_volume(e);
  return v;
}

double MeshLevel::subdomain_volume(int label) const {
  double v = 0.0;
  for (int e = 0; e < num_elements(); ++e) {
    bool match = (label == 0) ? elem_subdomain[e] == 0 : elem_subdomain[e] >= 1;
    if (label > 0) match = elem_subdomain[e] == label;
    if (match) v += element_volume(e);
  }
  return v;
}

double MeshLevel::interface_measure() const {
  double s = 0.0;
  for (int f = 0; f < num_interface_facets(); ++f) s += facet_measure(interface_facets, f);
  return s;
}

Eigen::VectorXd MeshLevel::min_incident_edge_length() const {
  Eigen::VectorXd len =
      Eigen::VectorXd::Constant(num_vertices(), std::numeric_limits<double>::infinity());
  for (int e = 0; e < num_elements(); ++e)
    for (int i = 0; i <= dim; ++i)
      for (int j = i + 1; j <= dim; ++j) {
        int a = simplices(e, i), b = simplices(e, j);
        double l = (coords.row(a) - coords.row(b)).norm();
        len[a] = std::min(len[a], l);
        len[b] = std::min(len[b], l);
      }
  return len;
}

double MeshLevel::mean_interface_edge_length() const {
  if (num_interface_facets() == 0) return 0.0;
  if (dim == 2) return interface_measure() / num_interface_facets();
  // 3d: average over interface triangle edges.
  double sum = 0.0;
  int count = 0;
  for (int f = 0; f < num_interface_facets(); ++f)
    for (int i = 0; i < 3; ++i) {
      int a = interface_facets(f, i), b = interface_facets(f, (i + 1) % 3);
      sum += (coords.row(a) - coords.row(b)).norm();
      ++count;
    }
  return sum / count;
}

std::vector<char> interface_vertex_mask(const MeshLevel& level) {
  std::vector<char> mask(level.num_vertices(), 0);
  for (int f = 0; f < level.num_interface_facets(); ++f)
    for (int i = 0; i < level.dim; ++i) mask[level.interface_facets(f, i)] = 1;
  return mask;
}

std::vector<char> boundary_vertex_mask(const MeshLevel& level) {
  std::vector<char> mask(level.num_vertices(), 0);
  for (int f = 0; f < level.num_boundary_facets(); ++f)
    for (int i = 0; i < level.dim; ++i) mask[level.boundary_facets(f, i)] = 1;
  return mask;
}

void validate_mesh(const MeshLevel& m) {
  const int d = m.dim;
  if (d != 2 && d != 3) fail("dimension must be 2 or 3");
  if (m.coords.cols() != d) fail("coords column count does not match dimension");
  if (m.simplices.cols() != d + 1) fail("simplex vertex count does not match dimension");
  if (m.elem_subdomain.size() != m.num_elements()) fail("elem_subdomain size mismatch");
  if (static_cast<int>(m.boundary_labels.size()) != m.num_boundary_facets())
    fail("boundary label count mismatch");

  const int nv = m.num_vertices();
  auto check_index = [&](int v, const char* where) {
    if (v < 0 || v >= nv) fail(std::string("vertex index out of range in ") + where);
  };
  for (int e = 0; e < m.num_elements(); ++e)
    for (int i = 0; i <= d; ++i) check_index(m.simplices(e, i), "simplices");
  for (int f = 0; f < m.num_boundary_facets(); ++f)
    for (int i = 0; i < d; ++i) check_index(m.boundary_facets(f, i), "boundary_facets");
  for (int f = 0; f < m.num_interface_facets(); ++f)
    for (int i = 0; i < d; ++i) check_index(m.interface_facets(f, i), "interface_facets");

  // Positive orientation.
  for (int e = 0; e < m.num_elements(); ++e)
    if (m.element_volume(e) <= 0.0) {
      std::ostringstream os;
      os << "element " << e << " has non-positive signed volume " << m.element_volume(e);
      fail(os.str());
    }

  // Facet incidence: interior facets shared by exactly 2 elements, the rest
  // must be exactly the labeled boundary facets.
  std::map<std::array<int, 3>, std::vector<int>> incidence;
  for (int e = 0; e < m.num_elements(); ++e)
    for (auto& f : element_facets(m, e)) incidence[facet_key(f, d)].push_back(e);
  for (auto& [key, elems] : incidence)
    if (elems.size() > 2) fail("facet shared by more than two elements (non-conforming)");

  std::set<std::array<int, 3>> boundary_set;
  for (int f = 0; f < m.num_boundary_facets(); ++f) {
    auto key = facet_key(m.boundary_facets, f, d);
    if (!boundary_set.insert(key).second) fail("duplicate boundary facet (labels must not overlap)");
    auto it = incidence.find(key);
    if (it == incidence.end() || it->second.size() != 1)
      fail("labeled boundary facet is not a one-element facet");
  }
  for (auto& [key, elems] : incidence)
    if (elems.size() == 1 && boundary_set.count(key) == 0)
      fail("unlabeled boundary facet found (boundary labels must cover the outer boundary)");

  // Interface facets: between exactly one inclusion element and one out
  // element, oriented with the normal pointing out of the inclusion.
  for (int f = 0; f < m.num_interface_facets(); ++f) {
    auto key = facet_key(m.interface_facets, f, d);
    auto it = incidence.find(key);
    if (it == incidence.end() || it->second.size() != 2)
      fail("interface facet must be shared by exactly two elements");
    int e0 = it->second[0], e1 = it->second[1];
    int s0 = m.elem_subdomain[e0], s1 = m.elem_subdomain[e1];
    if (!((s0 == 0 && s1 >= 1) || (s0 >= 1 && s1 == 0)))
      fail("interface facet must separate an inclusion element from an out element");
    int e_int = (s0 >= 1) ? e0 : e1;
    int e_out = (s0 >= 1) ? e1 : e0;
    Eigen::VectorXd n = m.interface_normal(f);
    Eigen::VectorXd dir = m.element_centroid(e_out) - m.element_centroid(e_int);
    if (n.dot(dir) <= 0.0) fail("interface facet orientation does not point out of the inclusion");
  }
}

MeshLevel refine_uniform(const MeshLevel& level, RefinementMap* map) {
  validate_mesh(level);
  const int d = level.dim;
  const int nv = level.num_vertices();
  const int ne = level.num_elements();

  // Global edge midpoints.
  std::map<std::pair<int, int>, int> midpoint;
  auto edge_of = [](int a, int b) { return std::make_pair(std::min(a, b), std::max(a, b)); };
  std::vector<std::pair<int, int>> new_edges;
  for (int e = 0; e < ne; ++e)
    for (int i = 0; i <= d; ++i)
      for (int j = i + 1; j <= d; ++j) {
        auto key = edge_of(level.simplices(e, i), level.simplices(e, j));
        if (midpoint.emplace(key, 0).second) new_edges.push_back(key);
      }
  std::sort(new_edges.begin(), new_edges.end());
  int next = nv;
  for (auto& e : new_edges) midpoint[e] = next++;

  MeshLevel fine;
  fine.dim = d;
  fine.coords.resize(next, d);
  fine.coords.topRows(nv) = level.coords;
  for (auto& [edge, idx] : midpoint)
    fine.coords.row(idx) = 0.5 * (level.coords.row(edge.first) + level.coords.row(edge.second));

  if (map) {
    map->parent0.resize(next);
    map->parent1.resize(next);
    for (int v = 0; v < nv; ++v) map->parent0[v] = map->parent1[v] = v;
    for (auto& [edge, idx] : midpoint) {
      map->parent0[idx] = edge.first;
      map->parent1[idx] = edge.second;
    }
  }

  auto mid = [&](int a, int b) { return midpoint.at(edge_of(a, b)); };

  const int children = (d == 2) ? 4 : 8;
  fine.simplices.resize(ne * children, d + 1);
  fine.elem_subdomain.resize(ne * children);
  for (int e = 0; e < ne; ++e) {
    if (d == 2) {
      int a = level.simplices(e, 0), b = level.simplices(e, 1), c = level.simplices(e, 2);
      int ab = mid(a, b), bc = mid(b, c), ac = mid(a, c);
      int rows[4][3] = {{a, ab, ac}, {ab, b, bc}, {ac, bc, c}, {ab, bc, ac}};
      for (int k = 0; k < 4; ++k)
        for (int i = 0; i < 3; ++i) fine.simplices(4 * e + k, i) = rows[k][i];
    } else {
      // Bey's red refinement; the interior octahedron is split along the
      // (m02, m13) diagonal, which preserves positive orientation.
      int v0 = level.simplices(e, 0), v1 = level.simplices(e, 1);
      int v2 = level.simplices(e, 2), v3 = level.simplices(e, 3);
      int m01 = mid(v0, v1), m02 = mid(v0, v2), m03 = mid(v0, v3);
      int m12 = mid(v1, v2), m13 = mid(v1, v3), m23 = mid(v2, v3);
      int rows[8][4] = {{v0, m01, m02, m03}, {m01, v1, m12, m13}, {m02, m12, v2, m23},
                        {m03, m13, m23, v3}, {m01, m02, m03, m13}, {m01, m02, m13, m12},
                        {m02, m03, m13, m23}, {m02, m13, m12, m23}};
      for (int k = 0; k < 8; ++k)
        for (int i = 0; i < 4; ++i) fine.simplices(8 * e + k, i) = rows[k][i];
    }
    for (int k = 0; k < children; ++k) fine.elem_subdomain[children * e + k] = level.elem_subdomain[e];
  }

  // Facet refinement preserving stored orientation: an edge splits in 2, a
  // triangle into 4 with the parent winding.
  auto refine_facets = [&](const Eigen::MatrixXi& facets, Eigen::MatrixXi& out,
                           std::vector<int>& parent_of) {
    const int nf = static_cast<int>(facets.rows());
    const int fc = (d == 2) ? 2 : 4;
    out.resize(nf * fc, d);
    parent_of.assign(nf * fc, 0);
    for (int f = 0; f < nf; ++f) {
      if (d == 2) {
        int a = facets(f, 0), b = facets(f, 1), ab = mid(a, b);
        out.row(2 * f) << a, ab;
        out.row(2 * f + 1) << ab, b;
      } else {
        int a = facets(f, 0), b = facets(f, 1), c = facets(f, 2);
        int ab = mid(a, b), bc = mid(b, c), ac = mid(a, c);
        int rows[4][3] = {{a, ab, ac}, {ab, b, bc}, {ac, bc, c}, {ab, bc, ac}};
        for (int k = 0; k < 4; ++k)
          for (int i = 0; i < 3; ++i) out(4 * f + k, i) = rows[k][i];
      }
      for (int k = 0; k < fc; ++k) parent_of[fc * f + k] = f;
    }
  };

  std::vector<int> bparent, iparent;
  refine_facets(level.boundary_facets, fine.boundary_facets, bparent);
  refine_facets(level.interface_facets, fine.interface_facets, iparent);
  fine.boundary_labels.resize(bparent.size());
  for (size_t f = 0; f < bparent.size(); ++f)
    fine.boundary_labels[f] = level.boundary_labels[bparent[f]];

  return fine;
}

SimplicialMeshHierarchy build_hierarchy(const MeshLevel& coarse, int num_levels) {
  if (num_levels < 1) fail("hierarchy needs at least one level");
  SimplicialMeshHierarchy h;
  h.levels.push_back(coarse);
  validate_mesh(coarse);
  for (int l = 1; l < num_levels; ++l) {
    RefinementMap map;
    h.levels.push_back(refine_uniform(h.levels.back(), &map));
    h.maps.push_back(std::move(map));
  }
  return h;
}

std::optional<SimplicialMeshHierarchy> try_deform_all_levels(const SimplicialMeshHierarchy& h,
                                                             const Eigen::VectorXd& u_finest,
                                                             double scale) {
  const int d = h.dim();
  const MeshLevel& fine = h.finest();
  if (u_finest.size() != static_cast<Eigen::Index>(fine.num_vertices()) * d)
    fail("deformation field size does not match finest level");

  SimplicialMeshHierarchy out = h;
  for (auto& level : out.levels) {
    // Vertex nesting is index-preserving: coarse vertex i is fine vertex i.
    for (int v = 0; v < level.num_vertices(); ++v)
      for (int c = 0; c < d; ++c) level.coords(v, c) += scale * u_finest[v * d + c];
    for (int e = 0; e < level.num_elements(); ++e)
      if (!(level.element_volume(e) > 0.0)) return std::nullopt;  // also rejects non-finite
  }
  return out;
}

SimplicialMeshHierarchy deform_all_levels(const SimplicialMeshHierarchy& h,
                                          const Eigen::VectorXd& u_finest, double scale) {
  auto out = try_deform_all_levels(h, u_finest, scale);
  if (!out) fail("deformation inverts an element (step too large)");
  return *out;
}

QualityReport mesh_quality(const MeshLevel& level) {
  // Intentionally no validation: quality inspection must work on degenerate
  // meshes so the offending elements can be reported.
  const int d = level.dim;
  QualityReport rep;
  rep.ratios.resize(level.num_elements());
  const double inf = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  rep.min_ratio = inf;
  rep.max_ratio = 0.0;
  for (int e = 0; e < level.num_elements(); ++e) {
    double ratio;
    double vol = level.element_volume(e);
    if (vol <= 0.0) {
      rep.ratios[e] = inf;
      rep.degenerate.push_back(e);
      continue;
    }
    if (d == 2) {
      Eigen::Vector2d a = level.coords.row(level.simplices(e, 0));
      Eigen::Vector2d b = level.coords.row(level.simplices(e, 1));
      Eigen::Vector2d c = level.coords.row(level.simplices(e, 2));
      double la = (b - c).norm(), lb = (a - c).norm(), lc = (a - b).norm();
      double circum = la * lb * lc / (4.0 * vol);
      double inr = vol / (0.5 * (la + lb + lc));
      ratio = (inr > 0.0) ? circum / (2.0 * inr) : inf;
    } else {
      Eigen::Vector3d p0 = level.coords.row(level.simplices(e, 0));
      Eigen::Matrix3d A;
      Eigen::Vector3d rhs;
      for (int i = 0; i < 3; ++i) {
        Eigen::Vector3d pi = level.coords.row(level.simplices(e, i + 1));
        A.row(i) = 2.0 * (pi - p0).transpose();
        rhs[i] = pi.squaredNorm() - p0.squaredNorm();
      }
      double surf = 0.0;
      for (int skip = 0; skip < 4; ++skip) {
        std::array<Eigen::Vector3d, 3> t;
        int j = 0;
        for (int i = 0; i < 4; ++i)
          if (i != skip) t[j++] = level.coords.row(level.simplices(e, i));
        surf += 0.5 * (t[1] - t[0]).cross(t[2] - t[0]).norm();
      }
      if (std::abs(A.determinant()) < 1e-300) {
        ratio = inf;
      } else {
        Eigen::Vector3d center = A.colPivHouseholderQr().solve(rhs);
        double circum = (center - p0).norm();
        double inr = 3.0 * vol / surf;
        ratio = circum / (3.0 * inr);
      }
    }
    rep.ratios[e] = ratio;
    if (std::isinf(ratio)) {
      rep.degenerate.push_back(e);
    } else {
      sum += ratio;
      rep.min_ratio = std::min(rep.min_ratio, ratio);
      rep.max_ratio = std::max(rep.max_ratio, ratio);
    }
  }
  int finite = level.num_elements() - static_cast<int>(rep.degenerate.size());
  rep.mean_ratio = finite > 0 ? sum / finite : inf;
  if (finite == 0) rep.min_ratio = inf;
  if (!rep.degenerate.empty()) rep.max_ratio = inf;
  return rep;
}

double CurvatureField::max_abs() const {
  double m = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i)
    m = std::max(m, std::abs(values[i]));
  return m;
}

CurvatureField discrete_mean_curvature(const MeshLevel& level) {
  const int d = level.dim;
  CurvatureField field;
  field.values = Eigen::VectorXd::Zero(level.num_vertices());
  field.on_interface = interface_vertex_mask(level);

  if (level.num_interface_facets() == 0) return field;

  if (d == 2) {
    // Closed oriented polylines: every interface vertex needs exactly one
    // incoming and one outgoing edge.
    std::map<int, int> next, prev;
    for (int f = 0; f < level.num_interface_facets(); ++f) {
      int a = level.interface_facets(f, 0), b = level.interface_facets(f, 1);
      if (!next.emplace(a, b).second || !prev.emplace(b, a).second)
        fail("interface polyline is not simple");
    }
    for (auto& [v, n] : next)
      if (prev.find(v) == prev.end()) fail("interface curve is open (no curvature defined)");
    for (auto& [v, p] : prev)
      if (next.find(v) == next.end()) fail("interface curve is open (no curvature defined)");

    for (auto& [v, nxt] : next) {
      Eigen::Vector2d x = level.coords.row(v);
      Eigen::Vector2d xp = level.coords.row(prev.at(v));
      Eigen::Vector2d xn = level.coords.row(nxt);
      Eigen::Vector2d t1 = x - xp, t2 = xn - x;
      double cross = t1.x() * t2.y() - t1.y() * t2.x();
      double angle = std::atan2(cross, t1.dot(t2));
      // The stored orientation walks the inclusion counterclockwise (outward
      // normal to the right of the tangent), so a convex corner is a left
      // turn and comes out positive, matching div_Gamma(n) = 1/r on a circle.
      field.values[v] = angle / (0.5 * (t1.norm() + t2.norm()));
    }
  } else {
    // Meyer-type cotangent operator over the mixed Voronoi area.
    std::map<std::pair<int, int>, int> edge_count;
    auto edge_of = [](int a, int b) { return std::make_pair(std::min(a, b), std::max(a, b)); };
    for (int f = 0; f < level.num_interface_facets(); ++f)
      for (int i = 0; i < 3; ++i)
        edge_count[edge_of(level.interface_facets(f, i), level.interface_facets(f, (i + 1) % 3))]++;
    for (auto& [e, c] : edge_count)
      if (c != 2) fail("interface surface is open (no curvature defined)");

    const int nv = level.num_vertices();
    std::vector<Eigen::Vector3d> kvec(nv, Eigen::Vector3d::Zero());
    std::vector<Eigen::Vector3d> navg(nv, Eigen::Vector3d::Zero());
    std::vector<double> area(nv, 0.0);
    for (int f = 0; f < level.num_interface_facets(); ++f) {
      std::array<int, 3> v{level.interface_facets(f, 0), level.interface_facets(f, 1),
                           level.interface_facets(f, 2)};
      std::array<Eigen::Vector3d, 3> x{level.coords.row(v[0]), level.coords.row(v[1]),
                                       level.coords.row(v[2])};
      Eigen::Vector3d n2 = (x[1] - x[0]).cross(x[2] - x[0]);  // 2*area*normal
      double tri_area = 0.5 * n2.norm();
      std::array<double, 3> cot;
      bool obtuse = false;
      int obtuse_at = -1;
      for (int i = 0; i < 3; ++i) {
        Eigen::Vector3d e1 = x[(i + 1) % 3] - x[i];
        Eigen::Vector3d e2 = x[(i + 2) % 3] - x[i];
        double dot = e1.dot(e2);
        cot[i] = dot / e1.cross(e2).norm();
        if (dot < 0.0) {
          obtuse = true;
          obtuse_at = i;
        }
      }
      for (int i = 0; i < 3; ++i) {
        navg[v[i]] += n2;
        // Cotangent contribution of the two edges incident to vertex i.
        int j = (i + 1) % 3, k = (i + 2) % 3;
        kvec[v[i]] += cot[k] * (x[i] - x[j]);  // edge (i,j), opposite angle at k
        kvec[v[i]] += cot[j] * (x[i] - x[k]);  // edge (i,k), opposite angle at j
        if (!obtuse) {
          double a2 = (x[i] - x[j]).squaredNorm() * cot[k] + (x[i] - x[k]).squaredNorm() * cot[j];
          area[v[i]] += a2 / 8.0;
        } else {
          area[v[i]] += (i == obtuse_at) ? tri_area / 2.0 : tri_area / 4.0;
        }
      }
    }
    for (int v = 0; v < nv; ++v) {
      if (!field.on_interface[v]) continue;
      if (area[v] <= 0.0) fail("degenerate mixed area in curvature computation");
      Eigen::Vector3d K = kvec[v] / (2.0 * area[v]);
      double sign = (K.dot(navg[v]) >= 0.0) ? 1.0 : -1.0;
      field.values[v] = sign * K.norm();
    }
  }
  return field;
}

}  // namespace shapemg
