#include "pmspace/corpus.hpp"

#include "pmspace/error.hpp"
#include "pmspace/topology.hpp"

#include <Eigen/LU>

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

namespace pmspace {

namespace {

using Axial = std::pair<int, int>;

// CCW neighbour offsets of the triangular lattice q*(1,0) + r*(1/2, sqrt3/2).
constexpr std::array<Axial, 6> kAxialDirs{{{1, 0}, {0, 1}, {-1, 1}, {-1, 0}, {0, -1}, {1, -1}}};

Vec2 lattice_point(const Axial& a) {
  return {a.first + 0.5 * a.second, 0.5 * std::sqrt(3.0) * a.second};
}

int hex_distance(const Axial& a) {
  return (std::abs(a.first) + std::abs(a.second) + std::abs(a.first + a.second)) / 2;
}

// Hexagons centred on lattice points; vertex k of a hexagon is the lattice
// triangle (centre, dir k, dir k+1), placed by `corner`.
Mesh honeycomb(const std::vector<Axial>& centres,
               const std::function<Vec3(const Axial&, const Axial&, const Axial&)>& corner) {
  std::map<std::array<Axial, 3>, int> ids;
  std::vector<Vec3> points;
  std::vector<Face> faces;
  for (const Axial& c : centres) {
    Face face;
    for (int k = 0; k < 6; ++k) {
      const Axial a{c.first + kAxialDirs[k].first, c.second + kAxialDirs[k].second};
      const Axial b{c.first + kAxialDirs[(k + 1) % 6].first, c.second + kAxialDirs[(k + 1) % 6].second};
      std::array<Axial, 3> key{c, a, b};
      std::sort(key.begin(), key.end());
      auto [it, inserted] = ids.try_emplace(key, static_cast<int>(points.size()));
      if (inserted) points.push_back(corner(c, a, b));
      face.push_back(it->second);
    }
    faces.push_back(std::move(face));
  }
  Eigen::Matrix3Xd V(3, points.size());
  for (std::size_t i = 0; i < points.size(); ++i) V.col(i) = points[i];
  return Mesh(std::move(V), std::move(faces));
}

Vec3 flat_corner(const Axial& a, const Axial& b, const Axial& c) {
  const Vec2 p = (lattice_point(a) + lattice_point(b) + lattice_point(c)) / 3.0;
  return {p.x(), p.y(), 0.0};
}

Mesh from_lists(const std::vector<Vec3>& points, std::vector<Face> faces) {
  Eigen::Matrix3Xd V(3, points.size());
  for (std::size_t i = 0; i < points.size(); ++i) V.col(i) = points[i];
  return Mesh(std::move(V), std::move(faces));
}

}  // namespace

Mesh cube(double half) {
  const double h = half;
  std::vector<Vec3> p{{-h, -h, -h}, {h, -h, -h}, {h, h, -h}, {-h, h, -h},
                      {-h, -h, h},  {h, -h, h},  {h, h, h},  {-h, h, h}};
  std::vector<Face> f{{0, 3, 2, 1}, {4, 5, 6, 7}, {0, 1, 5, 4}, {1, 2, 6, 5}, {2, 3, 7, 6}, {3, 0, 4, 7}};
  return from_lists(p, std::move(f));
}

Mesh open_box(double half) {
  const Mesh c = cube(half);
  std::vector<Face> faces = c.faces();
  faces.erase(faces.begin() + 1);
  return Mesh(c.vertices(), std::move(faces));
}

Mesh quad_grid(int nx, int ny, double spacing) {
  return lifted_grid(nx, ny, [](double) { return 0.0; }, [](double) { return 0.0; }, spacing);
}

Mesh lifted_grid(int nx, int ny, const std::function<double(double)>& f, const std::function<double(double)>& g,
                 double spacing) {
  if (nx < 2 || ny < 2) throw Error("invalid_argument", "grid needs at least 2 x 2 vertices");
  Eigen::Matrix3Xd V(3, nx * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double x = i * spacing, y = j * spacing;
      V.col(j * nx + i) = Vec3(x, y, f(x) + g(y));
    }
  }
  std::vector<Face> faces;
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      const int a = j * nx + i;
      faces.push_back({a, a + 1, a + nx + 1, a + nx});
    }
  }
  return Mesh(std::move(V), std::move(faces));
}

Mesh quad_torus(int nu, int nv, double major, double minor) {
  if (nu < 3 || nv < 3) throw Error("invalid_argument", "torus needs at least 3 x 3 faces");
  Eigen::Matrix3Xd V(3, nu * nv);
  for (int i = 0; i < nu; ++i) {
    const double theta = 2.0 * std::numbers::pi * i / nu;
    for (int j = 0; j < nv; ++j) {
      const double phi = 2.0 * std::numbers::pi * j / nv;
      const double rho = major + minor * std::cos(phi);
      V.col(i * nv + j) = Vec3(rho * std::cos(theta), rho * std::sin(theta), minor * std::sin(phi));
    }
  }
  std::vector<Face> faces;
  for (int i = 0; i < nu; ++i) {
    for (int j = 0; j < nv; ++j) {
      const int i1 = (i + 1) % nu, j1 = (j + 1) % nv;
      faces.push_back({i * nv + j, i1 * nv + j, i1 * nv + j1, i * nv + j1});
    }
  }
  return Mesh(std::move(V), std::move(faces));
}

Mesh hex_patch(int rings) {
  std::vector<Axial> centres;
  for (int q = -rings; q <= rings; ++q) {
    for (int r = -rings; r <= rings; ++r) {
      if (hex_distance({q, r}) <= rings) centres.emplace_back(q, r);
    }
  }
  return honeycomb(centres, flat_corner);
}

Mesh hex_strip(int count) {
  std::vector<Axial> centres;
  for (int q = 0; q < count; ++q) centres.emplace_back(q, 0);
  return honeycomb(centres, flat_corner);
}

Mesh hex_cap(int rings, double coverage) {
  const double rho_max = static_cast<double>(rings + 1);
  auto direction = [&](const Axial& a) {
    const Vec2 p = lattice_point(a);
    const double rho = p.norm();
    const double theta = rho / rho_max * coverage * 0.5 * std::numbers::pi;
    const double phi = std::atan2(p.y(), p.x());
    return Vec3(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
  };
  // tangent planes d . x = 1 of the unit sphere; a corner is where three meet
  auto corner = [&](const Axial& a, const Axial& b, const Axial& c) {
    Eigen::Matrix3d D;
    D.row(0) = direction(a).transpose();
    D.row(1) = direction(b).transpose();
    D.row(2) = direction(c).transpose();
    return Vec3(D.partialPivLu().solve(Vec3::Ones()));
  };
  std::vector<Axial> centres;
  for (int q = -rings; q <= rings; ++q) {
    for (int r = -rings; r <= rings; ++r) {
      if (hex_distance({q, r}) <= rings) centres.emplace_back(q, r);
    }
  }
  return honeycomb(centres, corner);
}

Mesh hexagonal_prism(double radius, double height) {
  std::vector<Vec3> p;
  for (int level = 0; level < 2; ++level) {
    for (int k = 0; k < 6; ++k) {
      const double t = std::numbers::pi * k / 3.0;
      p.emplace_back(radius * std::cos(t), radius * std::sin(t), level * height);
    }
  }
  std::vector<Face> f{{5, 4, 3, 2, 1, 0}, {6, 7, 8, 9, 10, 11}};
  for (int k = 0; k < 6; ++k) {
    const int k1 = (k + 1) % 6;
    f.push_back({k, k1, k1 + 6, k + 6});
  }
  return from_lists(p, std::move(f));
}

Mesh icosahedron() {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> p{{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& v : p) v.normalize();
  std::vector<Face> f{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                      {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  return from_lists(p, std::move(f));
}

Mesh icosphere(int level) {
  Mesh mesh = icosahedron();
  for (int l = 0; l < level; ++l) {
    std::vector<Vec3> p;
    for (int i = 0; i < mesh.num_vertices(); ++i) p.push_back(mesh.vertex(i));
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto [it, inserted] = mid.try_emplace(key, static_cast<int>(p.size()));
      if (inserted) p.push_back((p[a] + p[b]).normalized());
      return it->second;
    };
    std::vector<Face> faces;
    for (const Face& t : mesh.faces()) {
      const int ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
      faces.push_back({t[0], ab, ca});
      faces.push_back({t[1], bc, ab});
      faces.push_back({t[2], ca, bc});
      faces.push_back({ab, bc, ca});
    }
    mesh = from_lists(p, std::move(faces));
  }
  return mesh;
}

Mesh polar_of_triangulation(const Mesh& triangles) {
  if (!is_closed(triangles)) throw Error("invalid_mesh", "polar construction needs a closed triangle mesh");
  Eigen::Matrix3Xd V(3, triangles.num_faces());
  for (int f = 0; f < triangles.num_faces(); ++f) {
    const Face& t = triangles.face(f);
    if (t.size() != 3) throw Error("invalid_mesh", "polar construction needs triangles", {f});
    Eigen::Matrix3d P;
    for (int i = 0; i < 3; ++i) P.row(i) = triangles.vertex(t[i]).transpose();
    V.col(f) = P.partialPivLu().solve(Vec3::Ones());
  }
  return Mesh(std::move(V), vertex_face_fans(triangles));
}

Mesh dodecahedron() { return polar_of_triangulation(icosahedron()); }

Mesh goldberg(int level) { return polar_of_triangulation(icosphere(level)); }

Mesh irregular_3regular(std::uint32_t seed, int level, double amplitude) {
  const Mesh base = icosphere(level);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(1.0 - amplitude, 1.0 + amplitude);
  Eigen::Matrix3Xd V = base.vertices();
  for (Eigen::Index i = 0; i < V.cols(); ++i) V.col(i) *= u(rng);
  return polar_of_triangulation(base.with_vertices(std::move(V)));
}

std::vector<NamedMesh> standard_corpus() {
  std::vector<NamedMesh> out;
  for (const char* name : {"cube", "open_box", "quad", "grid5", "grid_lifted", "quad_strip", "torus", "hex_patch1",
                           "hex_patch2", "hex_strip4", "hex_cap2", "hex_prism", "dodecahedron", "goldberg1",
                           "irregular3"}) {
    out.push_back({name, corpus_mesh(name)});
  }
  return out;
}

std::vector<NamedMesh> closed_3regular_corpus() {
  std::vector<NamedMesh> out;
  for (const char* name : {"cube", "hex_prism", "dodecahedron", "goldberg1", "irregular3"}) {
    out.push_back({name, corpus_mesh(name)});
  }
  return out;
}

Mesh corpus_mesh(const std::string& name) {
  if (name == "cube") return cube();
  if (name == "open_box") return open_box();
  if (name == "quad") return quad_grid(2, 2);
  if (name == "grid5") return quad_grid(5, 5);
  if (name == "grid_lifted") {
    return lifted_grid(5, 6, [](double x) { return 0.3 * std::sin(x); }, [](double y) { return 0.1 * y * y; });
  }
  if (name == "quad_strip") return quad_grid(6, 2);
  if (name == "torus") return quad_torus(8, 6);
  if (name == "hex_patch1") return hex_patch(1);
  if (name == "hex_patch2") return hex_patch(2);
  if (name == "hex_strip4") return hex_strip(4);
  if (name == "hex_cap2") return hex_cap(2);
  if (name == "hex_prism") return hexagonal_prism();
  if (name == "dodecahedron") return dodecahedron();
  if (name == "goldberg1") return goldberg(1);
  if (name == "irregular3") return irregular_3regular(7);
  throw Error("invalid_argument", "unknown corpus mesh '" + name + "'");
}

}  // namespace pmspace
