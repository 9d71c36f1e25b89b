#include "pmspace/basis.hpp"

#include "pmspace/error.hpp"

#include <Eigen/SVD>
#include <Eigen/SPQRSupport>

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace pmspace {

namespace {

using Eigen::MatrixXd;

// Orthonormal basis of null(A) from the multifrontal QR of A^T: the trailing
// columns of Q beyond the detected rank.
MatrixXd sparse_nullspace(const SparseMatrix& A, double threshold) {
  const Eigen::Index c = A.cols();
  if (A.rows() == 0 || A.nonZeros() == 0) return MatrixXd::Identity(c, c);
  SparseMatrix At = A.transpose();
  At.makeCompressed();
  Eigen::SPQR<SparseMatrix> qr;
  qr.setPivotThreshold(threshold);
  qr.compute(At);
  if (qr.info() != Eigen::Success) throw Error("numerical", "sparse QR factorization failed");
  const Eigen::Index d = c - qr.rank();
  if (d <= 0) return MatrixXd(c, 0);
  MatrixXd E = MatrixXd::Zero(c, d);
  E.bottomRows(d).setIdentity();
  MatrixXd Q = qr.matrixQ() * E;
  return Q;
}

// Rows and columns of B restricted to one axis group.
SparseMatrix group_block(const ConstraintMatrix& cm, const std::vector<int>& group) {
  const int n = cm.num_vertices;
  std::vector<int> col_map(3 * n, -1);
  for (std::size_t g = 0; g < group.size(); ++g) {
    for (int v = 0; v < n; ++v) col_map[coord_index(n, v, group[g])] = static_cast<int>(g) * n + v;
  }
  std::vector<int> row_map(cm.rows(), -1);
  int rows = 0;
  std::vector<Eigen::Triplet<double>> trip;
  for (int col = 0; col < cm.B.outerSize(); ++col) {
    if (col_map[col] < 0) continue;
    for (SparseMatrix::InnerIterator it(cm.B, col); it; ++it) {
      int& r = row_map[it.row()];
      if (r < 0) r = rows++;
      trip.emplace_back(r, col_map[col], it.value());
    }
  }
  SparseMatrix sub(rows, static_cast<Eigen::Index>(group.size()) * n);
  sub.setFromTriplets(trip.begin(), trip.end());
  sub.makeCompressed();
  return sub;
}

}  // namespace

double estimate_sigma_max(const SparseMatrix& A, int iterations) {
  if (A.rows() == 0 || A.nonZeros() == 0) return 0.0;
  Eigen::VectorXd x(A.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = 1.0 + 0.01 * std::sin(1.0 + static_cast<double>(i));
  x.normalize();
  double sigma = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd y = A.transpose() * (A * x);
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    sigma = std::sqrt(norm);
    x = y / norm;
  }
  return sigma;
}

SubspaceBasis nullspace_basis(std::shared_ptr<const ConstraintMatrix> constraints, const NullspaceOptions& options) {
  const ConstraintMatrix& cm = *constraints;
  const int n = cm.num_vertices;
  SubspaceBasis basis;
  basis.tol = options.tol;
  basis.decoupled = cm.decoupled;
  basis.constraints = constraints;

  if (cm.decoupled) {
    basis.sigma_max = estimate_sigma_max(cm.axis_block);
    const MatrixXd Qa = sparse_nullspace(cm.axis_block, options.tol * basis.sigma_max);
    const Eigen::Index da = Qa.cols();
    basis.Q = MatrixXd::Zero(3 * n, 3 * da);
    for (int a = 0; a < 3; ++a) basis.Q.block(a * n, a * da, n, da) = Qa;
  } else {
    basis.sigma_max = estimate_sigma_max(cm.B);
    std::vector<MatrixXd> parts;
    Eigen::Index total = 0;
    for (const auto& group : cm.axis_groups) {
      parts.push_back(sparse_nullspace(group_block(cm, group), options.tol * basis.sigma_max));
      total += parts.back().cols();
    }
    basis.Q = MatrixXd::Zero(3 * n, total);
    Eigen::Index at = 0;
    for (std::size_t g = 0; g < cm.axis_groups.size(); ++g) {
      const auto& group = cm.axis_groups[g];
      const MatrixXd& part = parts[g];
      for (std::size_t i = 0; i < group.size(); ++i) {
        basis.Q.block(group[i] * n, at, n, part.cols()) = part.middleRows(i * n, n);
      }
      at += part.cols();
    }
  }
  basis.ndof = static_cast<int>(basis.Q.cols());
  return basis;
}

SubspaceBasis nullspace_basis(const ConstraintMatrix& constraints, const NullspaceOptions& options) {
  return nullspace_basis(std::make_shared<const ConstraintMatrix>(constraints), options);
}

SubspaceBasis build_subspace(const Mesh& mesh, const CaseAssignment& assignment,
                             const ConstraintOptions& constraint_options, const NullspaceOptions& nullspace_options) {
  auto cm = std::make_shared<const ConstraintMatrix>(assemble(mesh, assignment, constraint_options));
  return nullspace_basis(cm, nullspace_options);
}

Eigen::VectorXd project(const SubspaceBasis& basis, const Eigen::VectorXd& field) {
  if (field.size() != basis.Q.rows()) {
    throw Error("invalid_argument", "field size " + std::to_string(field.size()) + " does not match basis rows " +
                                        std::to_string(basis.Q.rows()));
  }
  return basis.Q * (basis.Q.transpose() * field);
}

Mesh closest_pm(const SubspaceBasis& basis, const Mesh& target, const std::vector<HardConstraint>& pinned) {
  const int n = target.num_vertices();
  if (3 * n != basis.Q.rows()) throw Error("invalid_argument", "target mesh does not match the basis vertex count");
  const MatrixXd& Q = basis.Q;
  Eigen::VectorXd W = Q.transpose() * target.vectorized();
  if (!pinned.empty()) {
    const Eigen::Index h = static_cast<Eigen::Index>(pinned.size());
    MatrixXd A(3 * h, Q.cols());
    Eigen::VectorXd p(3 * h);
    for (Eigen::Index i = 0; i < h; ++i) {
      const auto& [v, pos] = pinned[i];
      if (v < 0 || v >= n) throw Error("invalid_argument", "pinned vertex " + std::to_string(v) + " out of range", {v});
      for (int a = 0; a < 3; ++a) {
        A.row(3 * i + a) = Q.row(coord_index(n, v, a));
        p(3 * i + a) = pos(a);
      }
    }
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(A);
    W -= cod.solve(A * W - p);
    const double residual = (A * W - p).norm();
    if (residual > 1e-9 * std::max(1.0, p.norm())) {
      std::vector<int> ids;
      for (const auto& c : pinned) ids.push_back(c.first);
      std::ostringstream msg;
      msg << "pinned vertices cannot be met inside the subspace (constraint residual " << residual << ")";
      throw Error("infeasible_constraints", msg.str(), ids);
    }
  }
  return target.with_vectorized(Q * W);
}

std::string to_string(Containment c) {
  switch (c) {
    case Containment::Disjoint:
      return "disjoint";
    case Containment::AInB:
      return "A_in_B";
    case Containment::BInA:
      return "B_in_A";
    case Containment::Equal:
      return "equal";
    case Containment::Overlapping:
      return "overlapping";
  }
  return "unknown";
}

ContainmentResult containment_check(const SubspaceBasis& a, const SubspaceBasis& b, double tol) {
  if (a.Q.rows() != b.Q.rows()) throw Error("invalid_argument", "subspaces live in different vertex spaces");
  ContainmentResult out;
  out.dim_a = a.ndof;
  out.dim_b = b.ndof;
  if (a.ndof > 0) {
    const MatrixXd residual = a.Q - b.Q * (b.Q.transpose() * a.Q);
    Eigen::JacobiSVD<MatrixXd> svd(residual);
    // singular values are sines of the principal angles
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
      if (svd.singularValues()(i) <= tol) ++out.dim_intersection;
    }
  }
  const int k = out.dim_intersection;
  if (k == 0) {
    out.relation = Containment::Disjoint;
  } else if (k == out.dim_a && k == out.dim_b) {
    out.relation = Containment::Equal;
  } else if (k == out.dim_a) {
    out.relation = Containment::AInB;
  } else if (k == out.dim_b) {
    out.relation = Containment::BInA;
  } else {
    out.relation = Containment::Overlapping;
  }
  return out;
}

void write_matrix_dump(const MatrixXd& m, const nlohmann::json& header, std::ostream& out) {
  nlohmann::json h = header;
  h["rows"] = m.rows();
  h["cols"] = m.cols();
  out << h.dump() << '\n' << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
    out << '\n';
  }
}

void write_basis(const SubspaceBasis& basis, std::ostream& out) {
  write_matrix_dump(basis.Q, {{"tol", basis.tol}, {"ndof", basis.ndof}, {"decoupled", basis.decoupled}}, out);
}

MatrixXd read_matrix_dump(std::istream& in, nlohmann::json* header) {
  std::string line;
  if (!std::getline(in, line)) throw Error("parse_error", "matrix dump is empty");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error("parse_error", std::string("bad matrix dump header: ") + e.what());
  }
  const auto rows = h.at("rows").get<Eigen::Index>();
  const auto cols = h.at("cols").get<Eigen::Index>();
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!(in >> m(i, j))) throw Error("parse_error", "matrix dump truncated at row " + std::to_string(i));
    }
  }
  if (header) *header = h;
  return m;
}

}  // namespace pmspace
