#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <filesystem>
#include <string>
#include <vector>

namespace pmspace {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Face = std::vector<int>;

/// Vertex geometry (3 x n) plus oriented faces.
///
/// The constructor validates the invariants every other module relies on:
/// face indices in range, no repeated vertex inside a face, at least three
/// vertices per face, and edge-manifoldness (an undirected edge is used by at
/// most two faces, with opposite orientations).
///
/// Vectorized coordinates always use the axis-major layout
/// [x_1..x_n, y_1..y_n, z_1..z_n]; see `coord_index`.
class Mesh {
 public:
  Mesh() = default;
  Mesh(Eigen::Matrix3Xd vertices, std::vector<Face> faces);

  const Eigen::Matrix3Xd& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }
  int num_vertices() const { return static_cast<int>(vertices_.cols()); }
  int num_faces() const { return static_cast<int>(faces_.size()); }
  Vec3 vertex(int i) const { return vertices_.col(i); }
  const Face& face(int f) const { return faces_[f]; }

  /// 3 x k matrix of the face's vertex positions in face order.
  Eigen::Matrix3Xd face_vertices(int f) const;

  Eigen::VectorXd vectorized() const;
  /// Same topology, new geometry (no revalidation of topology needed).
  Mesh with_vertices(Eigen::Matrix3Xd vertices) const;
  /// Same topology with geometry X + field (field in vectorized layout).
  Mesh displaced(const Eigen::VectorXd& field) const;
  Mesh with_vectorized(const Eigen::VectorXd& coords) const;

  double bbox_diagonal() const;

 private:
  Eigen::Matrix3Xd vertices_;
  std::vector<Face> faces_;
};

inline int coord_index(int num_vertices, int vertex, int axis) { return axis * num_vertices + vertex; }

Eigen::Matrix3Xd unvectorize(const Eigen::VectorXd& coords);

// ---------------------------------------------------------------------------
// I/O

/// Reads an ASCII OBJ (`v` and `f` records, polygonal faces, 1-based or
/// negative relative indices). Errors carry the line number.
Mesh load_mesh(const std::filesystem::path& path);
Mesh parse_obj(std::istream& in, const std::string& source_name = "<stream>");
/// Writes `v`/`f` records with the given number of significant digits.
void save_mesh(const Mesh& mesh, const std::filesystem::path& path, int precision = 17);
void write_obj(const Mesh& mesh, std::ostream& out, int precision = 17);
std::string to_obj_string(const Mesh& mesh, int precision = 17);

// ---------------------------------------------------------------------------
// Planes and planarity

struct FacePlane {
  Vec3 centroid;
  Vec3 normal;    // unit, oriented with the face winding
  double offset;  // normal . centroid
};

/// Least-squares plane of a point polygon (centered covariance analysis).
/// `scale` sets the degeneracy threshold: the polygon is rejected when its
/// second singular value is below 1e-9 * scale.
FacePlane fit_plane(const Eigen::Matrix3Xd& points, double scale);
FacePlane face_plane(const Mesh& mesh, int face);

/// Max vertex distance to the best-fit plane divided by the mesh bounding-box
/// diagonal. Triangles are exactly 0.
double planarity_error(const Mesh& mesh, int face);

struct PlanarityReport {
  std::vector<double> faces;
  double max = 0.0;
};
PlanarityReport planarity_report(const Mesh& mesh);

// ---------------------------------------------------------------------------
// Combinatorics

struct MeshCounts {
  int num_vertices = 0;
  int num_edges = 0;
  int num_faces = 0;
  int num_corners = 0;
  int num_boundary_vertices = 0;
  int num_boundary_loops = 0;
  /// Genus under the convention N_v - N_e + N_f - b = 2g (a cube gives 1).
  int genus_paper = 0;
};
MeshCounts counts(const Mesh& mesh);

/// Inserts a vertex at every edge midpoint; each k-gon becomes a 2k-gon.
Mesh halfedge_subdivide(const Mesh& mesh);

/// Tutte embedding of a disk-topology mesh: the boundary loop goes to the
/// convex polygon (by arc length), interior vertices to the average of their
/// neighbours, z = 0.
Mesh tutte_flatten(const Mesh& mesh, const std::vector<Vec2>& boundary_shape);
std::vector<Vec2> unit_square();
std::vector<Vec2> regular_polygon(int sides, double radius = 1.0);

}  // namespace pmspace
