#pragma once

#include "pmspace/cases.hpp"
#include "pmspace/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <optional>
#include <vector>

namespace pmspace {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Record of how a prescribed-normal block was derived from its source face.
///
/// The centered source face decomposes as Y = hinge * y1 + in_plane * y2,
/// where `hinge` is the prescribed normal crossed with the source normal
/// (the line shared by source and target planes) and `in_plane` is
/// hinge x source_normal. `y2_null` is an orthonormal basis of the nullspace of
/// the row vector y2 (k x (k-1)).
struct ConstraintDerivation {
  Vec3 hinge;
  Vec3 in_plane;
  Eigen::RowVectorXd y1;
  Eigen::RowVectorXd y2;
  Eigen::MatrixXd y2_null;
};

/// Constraint rows of one face in the local layout
/// [x_0..x_{k-1}, y_0..y_{k-1}, z_0..z_{k-1}] of its vertices.
struct FaceBlock {
  Eigen::MatrixXd rows;          // r x 3k, orthonormal rows
  FaceCase applied;              // case actually used (after fallback)
  bool fell_back = false;        // prescribed normal ~ source normal -> parallel
  double scaling = 1.0;          // largest singular value of the raw block
  bool axis_separable = false;   // rows == blockdiag(G, G, G)
  Eigen::MatrixXd axis_rows;     // G (r/3 x k) when axis_separable
  std::optional<ConstraintDerivation> derivation;
};

struct ConstraintOptions {
  double block_tol = 1e-10;       // per-face singular value cutoff (relative)
  double planarity_tol = 1e-6;    // relative planarity required of source faces
  double fallback_cos = 1.0 - 1e-8;
};

/// Rows of B_f for one source face. All three cases act on the per-face
/// centered coordinates, so translations always satisfy the block.
///   Affine:   X C (Y^+ Y - I) = 0 with Y the centered source face.
///   Parallel: n_Y . (x_i - x_{i+1}) = 0 over the face's edges.
///   Prescribed normal n: (X C x N) M = 0 with N = n x n_Y and M = null(y2).
/// `scale` is the degeneracy reference length (usually the mesh diagonal).
FaceBlock build_face_constraints(const Eigen::Matrix3Xd& source_face, const FaceCase& face_case,
                                 double scale, const ConstraintOptions& options = {});

/// Orthonormal basis of the row space of `raw`, keeping singular values above
/// rel_tol times the largest one.
Eigen::MatrixXd orthonormal_rows(const Eigen::MatrixXd& raw, double rel_tol);

struct FaceRows {
  int face = -1;
  int begin = 0;  // first row in B
  int count = 0;
  FaceCase applied;
  bool fell_back = false;
  double scaling = 1.0;
  std::optional<ConstraintDerivation> derivation;
};

/// Sparse global constraint operator B acting on vec(X) (3n columns, layout
/// [x.., y.., z..]); its nullspace is the generated subspace.
struct ConstraintMatrix {
  SparseMatrix B;
  int num_vertices = 0;
  std::vector<FaceRows> provenance;  // only faces that contributed rows
  /// B splits into three identical per-axis blocks (every constrained face
  /// is affine). `axis_block` then holds that block (rows x n).
  bool decoupled = false;
  SparseMatrix axis_block;
  /// Axis groups coupled by at least one row; e.g. {{0},{1},{2}} or {{0,1},{2}}.
  std::vector<std::vector<int>> axis_groups;

  int rows() const { return static_cast<int>(B.rows()); }
  int cols() const { return static_cast<int>(B.cols()); }
  /// Face that owns a row, or -1.
  int face_of_row(int row) const;
  /// L_B = B^T B.
  SparseMatrix normal_operator() const;
  double residual(const Eigen::VectorXd& field) const { return (B * field).norm(); }
};

ConstraintMatrix assemble(const Mesh& mesh, const CaseAssignment& assignment,
                          const ConstraintOptions& options = {});

}  // namespace pmspace
