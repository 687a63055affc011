#pragma once

#include <iosfwd>
#include <string>

#include "mesh.hpp"

namespace meshguard {

// Gmsh MSH 2.2 ASCII reader. Supported element types: 1 (2-node line) and
// 2 (3-node triangle) in 2D, 2 and 4 (4-node tetrahedron) in 3D. The mesh
// is 3D iff it contains tetrahedra. Nodes are renumbered consecutively in
// file order; inverted cells are repaired by swapping the last two nodes.
Mesh load_msh(const std::string& path);
Mesh parse_msh(std::istream& in, const std::string& source_name);

// MSH 2.2 ASCII writer, 17 significant digit coordinates, atomic write.
void save_msh(const Mesh& mesh, const std::string& path);
std::string format_msh(const Mesh& mesh);

}  // namespace meshguard
