#pragma once

#include "pmspace/mesh.hpp"

#include <map>
#include <utility>
#include <vector>

namespace pmspace {

/// Undirected edges (a < b) in order of first appearance while walking faces.
std::vector<std::pair<int, int>> mesh_edges(const Mesh& mesh);

/// Directed half-edge (a -> b) to the face that owns it.
std::map<std::pair<int, int>, int> halfedge_faces(const Mesh& mesh);

/// Boundary loops as vertex cycles, each following the boundary half-edges
/// (so the mesh interior lies to the left).
std::vector<std::vector<int>> boundary_loops(const Mesh& mesh);

std::vector<std::vector<int>> vertex_neighbors(const Mesh& mesh);

/// Faces around each vertex. For interior vertices the fan is ordered
/// counter-clockwise when viewed from the side the face normals point to;
/// open fans are returned in the same rotational sense starting at a boundary.
std::vector<std::vector<int>> vertex_face_fans(const Mesh& mesh);

bool is_closed(const Mesh& mesh);

}  // namespace pmspace
