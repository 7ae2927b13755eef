#include "shapemg/mesh_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace shapemg {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("mesh_io: " + msg); }

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

MeshLevel read_mesh_ascii(std::istream& in) {
  MeshLevel m;
  int nv = 0, ne = 0, nbf = 0, nif = 0;
  if (!(in >> m.dim >> nv >> ne >> nbf >> nif)) fail("bad header");
  if (m.dim != 2 && m.dim != 3) fail("dimension must be 2 or 3");
  const int d = m.dim;

  m.coords.resize(nv, d);
  for (int v = 0; v < nv; ++v)
    for (int c = 0; c < d; ++c)
      if (!(in >> m.coords(v, c))) fail("truncated coordinates");

  m.simplices.resize(ne, d + 1);
  m.elem_subdomain.resize(ne);
  for (int e = 0; e < ne; ++e) {
    for (int i = 0; i <= d; ++i)
      if (!(in >> m.simplices(e, i))) fail("truncated elements");
    if (!(in >> m.elem_subdomain[e])) fail("truncated subdomain label");
    if (m.elem_subdomain[e] < 0) fail("subdomain label must be >= 0");
  }

  m.boundary_facets.resize(nbf, d);
  m.boundary_labels.resize(nbf);
  for (int f = 0; f < nbf; ++f) {
    for (int i = 0; i < d; ++i)
      if (!(in >> m.boundary_facets(f, i))) fail("truncated boundary facets");
    std::string label;
    if (!(in >> label)) fail("truncated boundary label");
    m.boundary_labels[f] = boundary_label_from_string(label);
  }

  m.interface_facets.resize(nif, d);
  for (int f = 0; f < nif; ++f) {
    for (int i = 0; i < d; ++i)
      if (!(in >> m.interface_facets(f, i))) fail("truncated interface facets");
    int flag = 0;
    if (!(in >> flag)) fail("truncated orientation flag");
    if (flag != 1 && flag != -1) fail("orientation flag must be +1 or -1");
    if (flag == -1) std::swap(m.interface_facets(f, 0), m.interface_facets(f, 1));
  }

  validate_mesh(m);
  return m;
}

MeshLevel read_mesh_ascii_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  return read_mesh_ascii(in);
}

void write_mesh_ascii(const MeshLevel& m, std::ostream& out) {
  const int d = m.dim;
  out << d << ' ' << m.num_vertices() << ' ' << m.num_elements() << ' ' << m.num_boundary_facets()
      << ' ' << m.num_interface_facets() << '\n';
  for (int v = 0; v < m.num_vertices(); ++v) {
    for (int c = 0; c < d; ++c) out << (c ? " " : "") << format_double(m.coords(v, c));
    out << '\n';
  }
  for (int e = 0; e < m.num_elements(); ++e) {
    for (int i = 0; i <= d; ++i) out << m.simplices(e, i) << ' ';
    out << m.elem_subdomain[e] << '\n';
  }
  for (int f = 0; f < m.num_boundary_facets(); ++f) {
    for (int i = 0; i < d; ++i) out << m.boundary_facets(f, i) << ' ';
    out << to_string(m.boundary_labels[f]) << '\n';
  }
  for (int f = 0; f < m.num_interface_facets(); ++f) {
    for (int i = 0; i < d; ++i) out << m.interface_facets(f, i) << ' ';
    out << 1 << '\n';
  }
}

void write_mesh_ascii_file(const MeshLevel& level, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot open '" + path + "' for writing");
  write_mesh_ascii(level, out);
}

void write_vtk(const MeshLevel& m, const std::string& path, const CurvatureField* curvature) {
  std::ofstream out(path);
  if (!out) fail("cannot open '" + path + "' for writing");
  const int d = m.dim;
  out << "# vtk DataFile Version 3.0\nshapemg mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << m.num_vertices() << " double\n";
  for (int v = 0; v < m.num_vertices(); ++v) {
    out << format_double(m.coords(v, 0)) << ' ' << format_double(m.coords(v, 1)) << ' '
        << (d == 3 ? format_double(m.coords(v, 2)) : "0") << '\n';
  }
  const int ne = m.num_elements();
  out << "CELLS " << ne << ' ' << ne * (d + 2) << '\n';
  for (int e = 0; e < ne; ++e) {
    out << (d + 1);
    for (int i = 0; i <= d; ++i) out << ' ' << m.simplices(e, i);
    out << '\n';
  }
  out << "CELL_TYPES " << ne << '\n';
  for (int e = 0; e < ne; ++e) out << (d == 2 ? 5 : 10) << '\n';
  out << "CELL_DATA " << ne << "\nSCALARS subdomain int 1\nLOOKUP_TABLE default\n";
  for (int e = 0; e < ne; ++e) out << m.elem_subdomain[e] << '\n';
  if (curvature) {
    out << "POINT_DATA " << m.num_vertices() << "\nSCALARS curvature double 1\nLOOKUP_TABLE default\n";
    for (int v = 0; v < m.num_vertices(); ++v) out << format_double(curvature->values[v]) << '\n';
  }
}

}  // namespace shapemg
