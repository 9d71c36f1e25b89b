#include "pmspace/mesh.hpp"

#include "pmspace/error.hpp"
#include "pmspace/topology.hpp"

#include <Eigen/SVD>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace pmspace {

namespace {

std::string edge_name(int a, int b) {
  return "(" + std::to_string(a) + ", " + std::to_string(b) + ")";
}

}  // namespace

Mesh::Mesh(Eigen::Matrix3Xd vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
  const int n = num_vertices();
  std::map<std::pair<int, int>, int> directed;  // half-edge -> face
  std::map<std::pair<int, int>, int> undirected_uses;
  for (int f = 0; f < num_faces(); ++f) {
    const Face& face = faces_[f];
    if (face.size() < 3) {
      throw Error("invalid_mesh", "face " + std::to_string(f) + " has fewer than 3 vertices", {f});
    }
    std::set<int> seen;
    for (int v : face) {
      if (v < 0 || v >= n) {
        throw Error("invalid_mesh",
                    "face " + std::to_string(f) + " references vertex " + std::to_string(v) +
                        " outside [0, " + std::to_string(n) + ")",
                    {f});
      }
      if (!seen.insert(v).second) {
        throw Error("invalid_mesh", "face " + std::to_string(f) + " repeats vertex " + std::to_string(v), {f});
      }
    }
    const int k = static_cast<int>(face.size());
    for (int i = 0; i < k; ++i) {
      const int a = face[i];
      const int b = face[(i + 1) % k];
      if (!directed.emplace(std::make_pair(a, b), f).second) {
        throw Error("non_manifold",
                    "non-manifold edge " + edge_name(a, b) + ": used twice with the same orientation",
                    {a, b});
      }
      if (++undirected_uses[{std::min(a, b), std::max(a, b)}] > 2) {
        throw Error("non_manifold", "non-manifold edge " + edge_name(a, b) + ": used by more than two faces",
                    {a, b});
      }
    }
  }
}

Eigen::Matrix3Xd Mesh::face_vertices(int f) const {
  const Face& face = faces_[f];
  Eigen::Matrix3Xd out(3, face.size());
  for (std::size_t i = 0; i < face.size(); ++i) out.col(i) = vertices_.col(face[i]);
  return out;
}

Eigen::VectorXd Mesh::vectorized() const {
  const int n = num_vertices();
  Eigen::VectorXd out(3 * n);
  for (int a = 0; a < 3; ++a) out.segment(a * n, n) = vertices_.row(a).transpose();
  return out;
}

Eigen::Matrix3Xd unvectorize(const Eigen::VectorXd& coords) {
  const Eigen::Index n = coords.size() / 3;
  Eigen::Matrix3Xd out(3, n);
  for (int a = 0; a < 3; ++a) out.row(a) = coords.segment(a * n, n).transpose();
  return out;
}

Mesh Mesh::with_vertices(Eigen::Matrix3Xd vertices) const {
  if (vertices.cols() != vertices_.cols()) {
    throw Error("invalid_argument", "vertex count mismatch: expected " + std::to_string(vertices_.cols()) +
                                        ", got " + std::to_string(vertices.cols()));
  }
  Mesh out;
  out.vertices_ = std::move(vertices);
  out.faces_ = faces_;
  return out;
}

Mesh Mesh::displaced(const Eigen::VectorXd& field) const {
  if (field.size() != 3 * num_vertices()) {
    throw Error("invalid_argument", "displacement field has size " + std::to_string(field.size()) +
                                        ", expected " + std::to_string(3 * num_vertices()));
  }
  return with_vertices(vertices_ + unvectorize(field));
}

Mesh Mesh::with_vectorized(const Eigen::VectorXd& coords) const {
  if (coords.size() != 3 * num_vertices()) {
    throw Error("invalid_argument", "coordinate vector has size " + std::to_string(coords.size()) +
                                        ", expected " + std::to_string(3 * num_vertices()));
  }
  return with_vertices(unvectorize(coords));
}

double Mesh::bbox_diagonal() const {
  if (vertices_.cols() == 0) return 0.0;
  return (vertices_.rowwise().maxCoeff() - vertices_.rowwise().minCoeff()).norm();
}

// ---------------------------------------------------------------------------
// OBJ

Mesh parse_obj(std::istream& in, const std::string& source_name) {
  std::vector<Vec3> verts;
  std::vector<Face> faces;
  std::vector<int> face_lines;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& what) -> Error {
    return Error("parse_error", source_name + ":" + std::to_string(line_no) + ": " + what, {line_no});
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x() >> p.y() >> p.z())) throw fail("vertex record needs three coordinates");
      if (!p.allFinite()) throw fail("non-finite vertex coordinate");
      verts.push_back(p);
    } else if (tag == "f") {
      Face face;
      std::string tok;
      while (ls >> tok) {
        const std::string idx = tok.substr(0, tok.find('/'));
        long value = 0;
        try {
          std::size_t used = 0;
          value = std::stol(idx, &used);
          if (used != idx.size()) throw std::invalid_argument(idx);
        } catch (const std::exception&) {
          throw fail("bad face index '" + tok + "'");
        }
        if (value == 0) throw fail("face index 0 is invalid (OBJ indices are 1-based)");
        const long resolved = value > 0 ? value - 1 : static_cast<long>(verts.size()) + value;
        if (resolved < 0 || resolved >= static_cast<long>(verts.size())) {
          throw fail("face index " + std::to_string(value) + " refers to an undefined vertex");
        }
        face.push_back(static_cast<int>(resolved));
      }
      if (face.size() < 3) throw fail("face needs at least 3 vertices");
      faces.push_back(std::move(face));
      face_lines.push_back(line_no);
    }
    // other records (vn, vt, g, o, s, usemtl, ...) carry nothing we use
  }
  Eigen::Matrix3Xd X(3, verts.size());
  for (std::size_t i = 0; i < verts.size(); ++i) X.col(i) = verts[i];
  try {
    return Mesh(std::move(X), std::move(faces));
  } catch (const Error& e) {
    std::string where = source_name;
    if (e.code() == "invalid_mesh" && !e.ids().empty()) {
      where += ":" + std::to_string(face_lines[e.ids().front()]);
    }
    throw Error(e.code(), where + ": " + e.what(), e.ids());
  }
}

Mesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot open " + path.string());
  return parse_obj(in, path.string());
}

void write_obj(const Mesh& mesh, std::ostream& out, int precision) {
  out << std::setprecision(precision);
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    const Vec3 p = mesh.vertex(i);
    out << "v " << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  }
  for (const Face& face : mesh.faces()) {
    out << 'f';
    for (int v : face) out << ' ' << v + 1;
    out << '\n';
  }
}

void save_mesh(const Mesh& mesh, const std::filesystem::path& path, int precision) {
  std::ofstream out(path);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  write_obj(mesh, out, precision);
}

std::string to_obj_string(const Mesh& mesh, int precision) {
  std::ostringstream out;
  write_obj(mesh, out, precision);
  return out.str();
}

// ---------------------------------------------------------------------------
// Planes

FacePlane fit_plane(const Eigen::Matrix3Xd& points, double scale) {
  const Vec3 centroid = points.rowwise().mean();
  const Eigen::Matrix3Xd centered = points.colwise() - centroid;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeFullU);
  const auto& s = svd.singularValues();
  if (points.cols() < 3 || s.size() < 2 || s(1) < 1e-9 * scale) {
    throw Error("degenerate_face", "degenerate (collinear or zero-area) polygon");
  }
  Vec3 normal = svd.matrixU().col(2);
  // Newell's vector only fixes the sign
  Vec3 winding = Vec3::Zero();
  const Eigen::Index k = points.cols();
  for (Eigen::Index i = 0; i < k; ++i) winding += centered.col(i).cross(centered.col((i + 1) % k));
  if (normal.dot(winding) < 0.0) normal = -normal;
  normal.normalize();
  return {centroid, normal, normal.dot(centroid)};
}

FacePlane face_plane(const Mesh& mesh, int face) {
  try {
    return fit_plane(mesh.face_vertices(face), mesh.bbox_diagonal());
  } catch (const Error& e) {
    throw Error(e.code(), "face " + std::to_string(face) + ": " + e.what(), {face});
  }
}

double planarity_error(const Mesh& mesh, int face) {
  if (mesh.face(face).size() == 3) return 0.0;
  const FacePlane plane = face_plane(mesh, face);
  const Eigen::Matrix3Xd pts = mesh.face_vertices(face);
  const double dist = ((pts.colwise() - plane.centroid).transpose() * plane.normal).cwiseAbs().maxCoeff();
  return dist / mesh.bbox_diagonal();
}

PlanarityReport planarity_report(const Mesh& mesh) {
  PlanarityReport report;
  report.faces.reserve(mesh.num_faces());
  for (int f = 0; f < mesh.num_faces(); ++f) {
    report.faces.push_back(planarity_error(mesh, f));
    report.max = std::max(report.max, report.faces.back());
  }
  return report;
}

// ---------------------------------------------------------------------------
// Combinatorics

MeshCounts counts(const Mesh& mesh) {
  MeshCounts c;
  c.num_vertices = mesh.num_vertices();
  c.num_faces = mesh.num_faces();
  for (const Face& f : mesh.faces()) c.num_corners += static_cast<int>(f.size());
  c.num_edges = static_cast<int>(mesh_edges(mesh).size());
  const auto loops = boundary_loops(mesh);
  c.num_boundary_loops = static_cast<int>(loops.size());
  std::set<int> boundary;
  for (const auto& loop : loops) boundary.insert(loop.begin(), loop.end());
  c.num_boundary_vertices = static_cast<int>(boundary.size());
  // N_v - N_e + N_f - b is always even for a manifold mesh
  c.genus_paper = (c.num_vertices - c.num_edges + c.num_faces - c.num_boundary_loops) / 2;
  return c;
}

Mesh halfedge_subdivide(const Mesh& mesh) {
  const int n = mesh.num_vertices();
  const auto edges = mesh_edges(mesh);
  std::map<std::pair<int, int>, int> midpoint;
  Eigen::Matrix3Xd X(3, n + static_cast<Eigen::Index>(edges.size()));
  X.leftCols(n) = mesh.vertices();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [a, b] = edges[e];
    midpoint[edges[e]] = n + static_cast<int>(e);
    X.col(n + e) = 0.5 * (mesh.vertex(a) + mesh.vertex(b));
  }
  std::vector<Face> faces;
  faces.reserve(mesh.num_faces());
  for (const Face& face : mesh.faces()) {
    Face out;
    const std::size_t k = face.size();
    for (std::size_t i = 0; i < k; ++i) {
      const int a = face[i];
      const int b = face[(i + 1) % k];
      out.push_back(a);
      out.push_back(midpoint.at({std::min(a, b), std::max(a, b)}));
    }
    faces.push_back(std::move(out));
  }
  return Mesh(std::move(X), std::move(faces));
}

std::vector<Vec2> unit_square() { return {{0, 0}, {1, 0}, {1, 1}, {0, 1}}; }

std::vector<Vec2> regular_polygon(int sides, double radius) {
  std::vector<Vec2> out;
  for (int i = 0; i < sides; ++i) {
    const double t = 2.0 * std::numbers::pi * i / sides;
    out.emplace_back(radius * std::cos(t), radius * std::sin(t));
  }
  return out;
}

namespace {

double signed_area(const std::vector<Vec2>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

bool is_convex_ccw(const std::vector<Vec2>& poly) {
  const std::size_t m = poly.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Vec2 e0 = poly[(i + 1) % m] - poly[i];
    const Vec2 e1 = poly[(i + 2) % m] - poly[(i + 1) % m];
    if (e0.x() * e1.y() - e0.y() * e1.x() < -1e-12) return false;
  }
  return true;
}

}  // namespace

Mesh tutte_flatten(const Mesh& mesh, const std::vector<Vec2>& boundary_shape) {
  const MeshCounts c = counts(mesh);
  if (c.num_boundary_loops != 1 || c.num_vertices - c.num_edges + c.num_faces != 1) {
    throw Error("non_disk", "tutte_flatten requires disk topology (one boundary loop, Euler characteristic 1)");
  }
  std::vector<Vec2> poly = boundary_shape;
  if (poly.size() < 3) throw Error("invalid_argument", "boundary polygon needs at least 3 corners");
  if (signed_area(poly) < 0) std::reverse(poly.begin(), poly.end());
  if (!is_convex_ccw(poly)) throw Error("invalid_argument", "boundary polygon is not convex");

  std::vector<int> loop = boundary_loops(mesh).front();
  std::rotate(loop.begin(), std::min_element(loop.begin(), loop.end()), loop.end());
  const std::size_t nb = loop.size();

  // arc-length parameter of boundary vertices
  std::vector<double> t(nb + 1, 0.0);
  for (std::size_t i = 0; i < nb; ++i) {
    t[i + 1] = t[i] + (mesh.vertex(loop[(i + 1) % nb]) - mesh.vertex(loop[i])).norm();
  }
  if (t[nb] <= 0.0) {
    for (std::size_t i = 0; i <= nb; ++i) t[i] = static_cast<double>(i);
  }
  std::vector<double> perim(poly.size() + 1, 0.0);
  for (std::size_t i = 0; i < poly.size(); ++i) {
    perim[i + 1] = perim[i] + (poly[(i + 1) % poly.size()] - poly[i]).norm();
  }

  const int n = mesh.num_vertices();
  Eigen::Matrix3Xd X = Eigen::Matrix3Xd::Zero(3, n);
  std::vector<bool> on_boundary(n, false);
  for (std::size_t i = 0; i < nb; ++i) {
    const double s = t[i] / t[nb] * perim.back();
    std::size_t seg = std::upper_bound(perim.begin(), perim.end(), s) - perim.begin() - 1;
    seg = std::min(seg, poly.size() - 1);
    const double len = perim[seg + 1] - perim[seg];
    const double u = len > 0 ? (s - perim[seg]) / len : 0.0;
    const Vec2 p = (1 - u) * poly[seg] + u * poly[(seg + 1) % poly.size()];
    X(0, loop[i]) = p.x();
    X(1, loop[i]) = p.y();
    on_boundary[loop[i]] = true;
  }

  std::vector<int> interior_index(n, -1);
  int ni = 0;
  for (int v = 0; v < n; ++v) {
    if (!on_boundary[v]) interior_index[v] = ni++;
  }
  if (ni > 0) {
    const auto nbrs = vertex_neighbors(mesh);
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::MatrixX2d rhs = Eigen::MatrixX2d::Zero(ni, 2);
    for (int v = 0; v < n; ++v) {
      const int r = interior_index[v];
      if (r < 0) continue;
      trip.emplace_back(r, r, static_cast<double>(nbrs[v].size()));
      for (int w : nbrs[v]) {
        if (interior_index[w] >= 0) {
          trip.emplace_back(r, interior_index[w], -1.0);
        } else {
          rhs(r, 0) += X(0, w);
          rhs(r, 1) += X(1, w);
        }
      }
    }
    Eigen::SparseMatrix<double> A(ni, ni);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
    if (ldlt.info() != Eigen::Success) throw Error("numerical", "Tutte system factorization failed");
    const Eigen::MatrixX2d sol = ldlt.solve(rhs);
    for (int v = 0; v < n; ++v) {
      if (interior_index[v] >= 0) X.block<2, 1>(0, v) = sol.row(interior_index[v]).transpose();
    }
  }
  return mesh.with_vertices(std::move(X));
}

}  // namespace pmspace
