#include "pmspace/constraints.hpp"

#include "pmspace/error.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

namespace pmspace {

namespace {

using Eigen::MatrixXd;

MatrixXd centering(int k) {
  return MatrixXd::Identity(k, k) - MatrixXd::Constant(k, k, 1.0 / k);
}

double largest_singular_value(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(m);
  return svd.singularValues()(0);
}

struct AxisUnion {
  std::array<int, 3> parent{0, 1, 2};
  int find(int a) { return parent[a] == a ? a : parent[a] = find(parent[a]); }
  void unite(int a, int b) { parent[find(a)] = find(b); }
  std::vector<std::vector<int>> groups() {
    std::vector<std::vector<int>> out;
    std::array<int, 3> slot{-1, -1, -1};
    for (int a = 0; a < 3; ++a) {
      const int r = find(a);
      if (slot[r] < 0) {
        slot[r] = static_cast<int>(out.size());
        out.emplace_back();
      }
      out[slot[r]].push_back(a);
    }
    return out;
  }
};

// Reduces a raw block (rows x 3k) to orthonormal rows while keeping axes that
// no raw row couples in separate rows.
MatrixXd reduce_by_axis_groups(const MatrixXd& raw, int k, double rel_tol) {
  AxisUnion axes;
  for (Eigen::Index r = 0; r < raw.rows(); ++r) {
    int first = -1;
    for (int a = 0; a < 3; ++a) {
      if (raw.row(r).segment(a * k, k).cwiseAbs().maxCoeff() == 0.0) continue;
      if (first < 0) {
        first = a;
      } else {
        axes.unite(first, a);
      }
    }
  }
  const double global_max = largest_singular_value(raw);
  std::vector<MatrixXd> parts;
  Eigen::Index total = 0;
  for (const auto& group : axes.groups()) {
    MatrixXd sub(raw.rows(), static_cast<Eigen::Index>(group.size()) * k);
    for (std::size_t g = 0; g < group.size(); ++g) sub.middleCols(g * k, k) = raw.middleCols(group[g] * k, k);
    // cutoff relative to the whole block, not the group
    Eigen::JacobiSVD<MatrixXd> svd(sub, Eigen::ComputeFullV);
    Eigen::Index keep = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
      if (svd.singularValues()(i) > rel_tol * global_max) ++keep;
    }
    const MatrixXd red = svd.matrixV().leftCols(keep).transpose();
    MatrixXd embedded = MatrixXd::Zero(keep, 3 * k);
    for (std::size_t g = 0; g < group.size(); ++g) embedded.middleCols(group[g] * k, k) = red.middleCols(g * k, k);
    total += keep;
    parts.push_back(std::move(embedded));
  }
  MatrixXd out(total, 3 * k);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p;
    at += p.rows();
  }
  return out;
}

FaceBlock parallel_block(const Eigen::Matrix3Xd& source, const Vec3& normal, double rel_tol) {
  const int k = static_cast<int>(source.cols());
  MatrixXd raw = MatrixXd::Zero(k, 3 * k);
  for (int i = 0; i < k; ++i) {
    const int j = (i + 1) % k;
    for (int a = 0; a < 3; ++a) {
      raw(i, a * k + i) += normal(a);
      raw(i, a * k + j) -= normal(a);
    }
  }
  FaceBlock block;
  block.applied = FaceCase::parallel();
  block.scaling = largest_singular_value(raw);
  block.rows = reduce_by_axis_groups(raw, k, rel_tol);
  return block;
}

}  // namespace

MatrixXd orthonormal_rows(const MatrixXd& raw, double rel_tol) {
  if (raw.rows() == 0 || raw.cols() == 0) return MatrixXd(0, raw.cols());
  Eigen::JacobiSVD<MatrixXd> svd(raw, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s(0);
  Eigen::Index keep = 0;
  if (smax > 0.0) {
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      if (s(i) > rel_tol * smax) ++keep;
    }
  }
  return svd.matrixV().leftCols(keep).transpose();
}

FaceBlock build_face_constraints(const Eigen::Matrix3Xd& source_face, const FaceCase& face_case, double scale,
                                 const ConstraintOptions& options) {
  const int k = static_cast<int>(source_face.cols());
  if (k < 3) throw Error("invalid_mesh", "face with fewer than 3 vertices");
  if (k == 3) {
    FaceBlock block;
    block.applied = face_case;
    block.rows = MatrixXd(0, 9);
    block.axis_separable = true;
    block.axis_rows = MatrixXd(0, 3);
    block.scaling = 0.0;
    return block;
  }
  const FacePlane plane = fit_plane(source_face, scale);
  const Eigen::Matrix3Xd centered = source_face.colwise() - plane.centroid;
  const MatrixXd C = centering(k);

  switch (face_case.kind) {
    case FaceCase::Kind::Affine: {
      // Y^+ Y restricted to the best-fit plane: projector onto the two
      // dominant right singular vectors of the centered face.
      Eigen::JacobiSVD<MatrixXd> svd(centered, Eigen::ComputeFullV);
      const MatrixXd V2 = svd.matrixV().leftCols(2);
      const MatrixXd raw = C - V2 * V2.transpose();
      FaceBlock block;
      block.applied = face_case;
      block.scaling = largest_singular_value(raw);
      block.axis_rows = orthonormal_rows(raw, options.block_tol);
      const Eigen::Index r = block.axis_rows.rows();
      block.rows = MatrixXd::Zero(3 * r, 3 * k);
      for (int a = 0; a < 3; ++a) block.rows.block(a * r, a * k, r, k) = block.axis_rows;
      block.axis_separable = true;
      return block;
    }
    case FaceCase::Kind::Parallel:
      return parallel_block(source_face, plane.normal, options.block_tol);
    case FaceCase::Kind::PrescribedNormal: {
      const Vec3 target = face_case.normal.normalized();
      if (std::abs(target.dot(plane.normal)) > options.fallback_cos) {
        FaceBlock block = parallel_block(source_face, plane.normal, options.block_tol);
        block.fell_back = true;
        return block;
      }
      ConstraintDerivation d;
      d.hinge = target.cross(plane.normal).normalized();
      d.in_plane = d.hinge.cross(plane.normal);
      d.y1 = d.hinge.transpose() * centered;
      d.y2 = d.in_plane.transpose() * centered;
      Eigen::JacobiSVD<MatrixXd> svd(MatrixXd(d.y2), Eigen::ComputeFullV);
      d.y2_null = svd.matrixV().rightCols(k - 1);

      // x -> x cross hinge as a matrix
      Eigen::Matrix3d K;
      K << 0.0, d.hinge.z(), -d.hinge.y(),
          -d.hinge.z(), 0.0, d.hinge.x(),
          d.hinge.y(), -d.hinge.x(), 0.0;
      MatrixXd raw = MatrixXd::Zero(3 * (k - 1), 3 * k);
      for (int j = 0; j < k - 1; ++j) {
        const Eigen::VectorXd m = C * d.y2_null.col(j);
        for (int c = 0; c < 3; ++c) {
          for (int a = 0; a < 3; ++a) {
            if (K(c, a) != 0.0) raw.row(3 * j + c).segment(a * k, k) = K(c, a) * m.transpose();
          }
        }
      }
      FaceBlock block;
      block.applied = face_case;
      block.scaling = largest_singular_value(raw);
      block.rows = reduce_by_axis_groups(raw, k, options.block_tol);
      block.derivation = std::move(d);
      return block;
    }
  }
  throw Error("invalid_argument", "unknown face case");
}

int ConstraintMatrix::face_of_row(int row) const {
  auto it = std::upper_bound(provenance.begin(), provenance.end(), row,
                             [](int r, const FaceRows& fr) { return r < fr.begin; });
  if (it == provenance.begin()) return -1;
  --it;
  return row < it->begin + it->count ? it->face : -1;
}

SparseMatrix ConstraintMatrix::normal_operator() const {
  SparseMatrix L = B.transpose() * B;
  L.makeCompressed();
  return L;
}

ConstraintMatrix assemble(const Mesh& mesh, const CaseAssignment& assignment, const ConstraintOptions& options) {
  const int n = mesh.num_vertices();
  if (assignment.size() != mesh.num_faces()) {
    throw Error("invalid_argument", "case assignment covers " + std::to_string(assignment.size()) +
                                        " faces but the mesh has " + std::to_string(mesh.num_faces()));
  }
  const double diag = mesh.bbox_diagonal();

  std::vector<int> degenerate, nonplanar;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    if (mesh.face(f).size() == 3) continue;
    try {
      if (planarity_error(mesh, f) > options.planarity_tol) nonplanar.push_back(f);
    } catch (const Error&) {
      degenerate.push_back(f);
    }
  }
  auto list = [](const std::vector<int>& ids) {
    std::ostringstream s;
    for (std::size_t i = 0; i < ids.size(); ++i) s << (i ? ", " : "") << ids[i];
    return s.str();
  };
  if (!degenerate.empty()) throw Error("degenerate_face", "degenerate faces: " + list(degenerate), degenerate);
  if (!nonplanar.empty()) {
    throw Error("nonplanar_face", "source faces not planar within tolerance: " + list(nonplanar), nonplanar);
  }

  ConstraintMatrix out;
  out.num_vertices = n;
  out.decoupled = true;
  std::vector<Eigen::Triplet<double>> trip, axis_trip;
  AxisUnion axes;
  int row = 0;
  int axis_row = 0;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    if (face.size() == 3) continue;
    const int k = static_cast<int>(face.size());
    FaceBlock block = build_face_constraints(mesh.face_vertices(f), assignment[f], diag, options);
    const int r = static_cast<int>(block.rows.rows());
    if (r == 0) continue;
    for (int i = 0; i < r; ++i) {
      int first_axis = -1;
      for (int a = 0; a < 3; ++a) {
        bool touches = false;
        for (int v = 0; v < k; ++v) {
          const double value = block.rows(i, a * k + v);
          if (value == 0.0) continue;
          touches = true;
          trip.emplace_back(row + i, coord_index(n, face[v], a), value);
        }
        if (!touches) continue;
        if (first_axis < 0) {
          first_axis = a;
        } else {
          axes.unite(first_axis, a);
        }
      }
    }
    if (block.axis_separable) {
      for (Eigen::Index i = 0; i < block.axis_rows.rows(); ++i) {
        for (int v = 0; v < k; ++v) {
          const double value = block.axis_rows(i, v);
          if (value != 0.0) axis_trip.emplace_back(axis_row + i, face[v], value);
        }
      }
      axis_row += static_cast<int>(block.axis_rows.rows());
    } else {
      out.decoupled = false;
    }
    FaceRows fr;
    fr.face = f;
    fr.begin = row;
    fr.count = r;
    fr.applied = block.applied;
    fr.fell_back = block.fell_back;
    fr.scaling = block.scaling;
    fr.derivation = std::move(block.derivation);
    out.provenance.push_back(std::move(fr));
    row += r;
  }
  out.B.resize(row, 3 * n);
  out.B.setFromTriplets(trip.begin(), trip.end());
  out.B.makeCompressed();
  if (out.decoupled) {
    out.axis_block.resize(axis_row, n);
    out.axis_block.setFromTriplets(axis_trip.begin(), axis_trip.end());
    out.axis_block.makeCompressed();
  }
  out.axis_groups = axes.groups();
  return out;
}

}  // namespace pmspace
