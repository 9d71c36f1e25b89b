#pragma once

#include "pmspace/constraints.hpp"

#include <iosfwd>
#include <memory>
#include <utility>
#include <vector>

namespace pmspace {

/// Column-orthonormal basis Q (3n x d) of null(B).
///
/// A basis keeps a handle on the operator it was computed from so that shape
/// queries can report ||B x|| residuals.
struct SubspaceBasis {
  Eigen::MatrixXd Q;
  int ndof = 0;
  bool decoupled = false;
  double tol = 1e-10;                // relative rank cutoff that was used
  double sigma_max = 0.0;            // largest singular value of B
  std::shared_ptr<const ConstraintMatrix> constraints;

  int num_vertices() const { return static_cast<int>(Q.rows() / 3); }
  /// Residual bound used by the "is this in the subspace" checks.
  double absolute_tol() const { return tol * std::max(sigma_max, 1.0); }
  /// P = Q Q^T, dense. Only for small problems and tests.
  Eigen::MatrixXd projector() const { return Q * Q.transpose(); }
};

struct NullspaceOptions {
  double tol = 1e-10;
};

/// Nullspace by sparse QR (SuiteSparseQR) of B^T with threshold rank detection. When B is
/// decoupled the per-axis block is factored once and replicated; otherwise
/// every coupled axis group is factored separately.
SubspaceBasis nullspace_basis(const ConstraintMatrix& constraints, const NullspaceOptions& options = {});
SubspaceBasis nullspace_basis(std::shared_ptr<const ConstraintMatrix> constraints,
                              const NullspaceOptions& options = {});

/// assemble + nullspace_basis.
SubspaceBasis build_subspace(const Mesh& mesh, const CaseAssignment& assignment,
                             const ConstraintOptions& constraint_options = {},
                             const NullspaceOptions& nullspace_options = {});

/// Largest singular value of a sparse matrix by power iteration on A^T A.
double estimate_sigma_max(const SparseMatrix& A, int iterations = 60);

/// Q Q^T v.
Eigen::VectorXd project(const SubspaceBasis& basis, const Eigen::VectorXd& field);

using HardConstraint = std::pair<int, Vec3>;

/// Closest element of the subspace to `target` in the least-squares sense,
/// with the listed vertices pinned exactly.
Mesh closest_pm(const SubspaceBasis& basis, const Mesh& target, const std::vector<HardConstraint>& pinned = {});

enum class Containment { Disjoint, AInB, BInA, Equal, Overlapping };
std::string to_string(Containment c);

struct ContainmentResult {
  Containment relation = Containment::Overlapping;
  int dim_a = 0;
  int dim_b = 0;
  int dim_intersection = 0;
};

/// Compares two subspaces of the same vertex space by principal-angle rank
/// tests. `tol` bounds the residual of a direction that counts as shared.
ContainmentResult containment_check(const SubspaceBasis& a, const SubspaceBasis& b, double tol = 1e-8);

/// Text dump: a JSON header line {"rows","cols","tol","ndof"} then one row of
/// the matrix per line at 17 significant digits.
void write_basis(const SubspaceBasis& basis, std::ostream& out);
Eigen::MatrixXd read_matrix_dump(std::istream& in, nlohmann::json* header = nullptr);
void write_matrix_dump(const Eigen::MatrixXd& m, const nlohmann::json& header, std::ostream& out);

}  // namespace pmspace
