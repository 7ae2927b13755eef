#pragma once

#include "shapemg/mesh.hpp"

#include <iosfwd>
#include <string>

namespace shapemg {

/// Plain-text mesh format. Header "dim nv ne nbf nif", then nv coordinate
/// lines, ne element lines "v0 .. vd subdomain", nbf boundary lines
/// "v0 .. v(d-1) label", nif interface lines "v0 .. v(d-1) orientation_flag".
/// The writer always emits flag +1 (vertices already in stored orientation);
/// the reader flips facets carrying -1.
MeshLevel read_mesh_ascii(std::istream& in);
MeshLevel read_mesh_ascii_file(const std::string& path);
void write_mesh_ascii(const MeshLevel& level, std::ostream& out);
void write_mesh_ascii_file(const MeshLevel& level, const std::string& path);

/// VTK legacy ASCII output with per-cell subdomain labels and, when given,
/// per-point curvature values.
void write_vtk(const MeshLevel& level, const std::string& path,
               const CurvatureField* curvature = nullptr);

}  // namespace shapemg
