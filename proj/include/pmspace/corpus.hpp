#pragma once

#include "pmspace/mesh.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace pmspace {

// Procedural planar-faced meshes used by tests, audits and the CLI.

/// Axis-aligned cube [-half, half]^3 with outward CCW faces.
Mesh cube(double half = 1.0);
/// Cube without its top face.
Mesh open_box(double half = 1.0);
/// Flat grid of nx x ny vertices (unit spacing) in z = 0.
Mesh quad_grid(int nx, int ny, double spacing = 1.0);
/// Grid lifted to z = f(x) + g(y); every quad stays planar.
Mesh lifted_grid(int nx, int ny, const std::function<double(double)>& f, const std::function<double(double)>& g,
                 double spacing = 1.0);
/// Quad torus with nu x nv faces. Quads are isosceles trapezoids, hence planar.
Mesh quad_torus(int nu, int nv, double major = 3.0, double minor = 1.0);

/// Flat honeycomb: all hexagons within `rings` steps of a central one.
Mesh hex_patch(int rings);
/// `count` flat hexagons in a row.
Mesh hex_strip(int count);
/// Honeycomb draped over a sphere cap. Each hexagon lies in the tangent plane
/// at its centre direction; `coverage` is the polar angle of the outer ring
/// in quarter turns (1 = hemisphere).
Mesh hex_cap(int rings, double coverage = 0.9);
/// Prism over a regular hexagon (two hexagons, six quads); 3-regular.
Mesh hexagonal_prism(double radius = 1.0, double height = 1.0);

Mesh icosahedron();
/// Icosahedron subdivided `level` times with vertices pushed to the unit sphere.
Mesh icosphere(int level);
/// Polar of a closed triangle mesh about the origin: one vertex per triangle
/// (the common point of the planes p . x = 1 of its corners), one face per
/// vertex. The result is a closed 3-regular mesh with planar faces.
Mesh polar_of_triangulation(const Mesh& triangles);
Mesh dodecahedron();
/// Pentagon/hexagon solid: polar of icosphere(level).
Mesh goldberg(int level = 1);
/// Closed 3-regular solid without symmetry: polar of a radially perturbed
/// icosphere.
Mesh irregular_3regular(std::uint32_t seed, int level = 1, double amplitude = 0.08);

struct NamedMesh {
  std::string name;
  Mesh mesh;
};

/// Small meshes covering quads, hexes, open and closed cases.
std::vector<NamedMesh> standard_corpus();
/// Closed 3-regular members of the corpus.
std::vector<NamedMesh> closed_3regular_corpus();
/// Mesh by corpus name (e.g. "cube", "grid5", "hex_cap2"); throws when unknown.
Mesh corpus_mesh(const std::string& name);

}  // namespace pmspace
