#include "pmspace/shapes.hpp"

#include "pmspace/error.hpp"
#include "pmspace/topology.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace pmspace {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Columns of B for a set of vertices, restricted to rows they touch.
struct ColumnBlock {
  MatrixXd M;
  std::vector<int> cols;  // global coordinates in M's column order
};

ColumnBlock gather_columns(const SparseMatrix& B, int n, const std::vector<int>& vertices) {
  ColumnBlock out;
  for (int a = 0; a < 3; ++a) {
    for (int v : vertices) out.cols.push_back(coord_index(n, v, a));
  }
  std::vector<int> row_map(B.rows(), -1);
  std::vector<int> rows;
  for (int c : out.cols) {
    for (SparseMatrix::InnerIterator it(B, c); it; ++it) {
      if (row_map[it.row()] < 0) {
        row_map[it.row()] = static_cast<int>(rows.size());
        rows.push_back(static_cast<int>(it.row()));
      }
    }
  }
  out.M = MatrixXd::Zero(rows.size(), out.cols.size());
  for (std::size_t j = 0; j < out.cols.size(); ++j) {
    for (SparseMatrix::InnerIterator it(B, out.cols[j]); it; ++it) out.M(row_map[it.row()], j) = it.value();
  }
  return out;
}

// Least-residual unit field supported on `vertices`.
VectorXd best_field(const SparseMatrix& B, int n, const std::vector<int>& vertices, double* residual) {
  const ColumnBlock block = gather_columns(B, n, vertices);
  VectorXd local;
  if (block.M.rows() == 0) {
    local = VectorXd::Zero(block.cols.size());
    local(local.size() - 1) = 1.0;  // z of the last vertex
    *residual = 0.0;
  } else {
    Eigen::JacobiSVD<MatrixXd> svd(block.M, Eigen::ComputeFullV);
    const Eigen::Index c = block.M.cols();
    local = svd.matrixV().col(c - 1);
    *residual = (block.M * local).norm();
  }
  VectorXd field = VectorXd::Zero(3 * n);
  for (std::size_t j = 0; j < block.cols.size(); ++j) field(block.cols[j]) = local(j);
  return field;
}

int starting_vertex(const SparseMatrix& B, int n) {
  int best = 0;
  double best_sigma = std::numeric_limits<double>::infinity();
  for (int v = 0; v < n; ++v) {
    double r = 0.0;
    best_field(B, n, {v}, &r);
    if (r < best_sigma) {
      best_sigma = r;
      best = v;
    }
  }
  return best;
}

struct Pursuit {
  std::vector<int> support;
  VectorXd field;
  double residual = std::numeric_limits<double>::infinity();
  std::vector<double> trace;
};

Pursuit run_pursuit(const SubspaceBasis& basis, const SparseShapeOptions& options) {
  if (!basis.constraints) throw Error("invalid_argument", "basis carries no constraint operator");
  const SparseMatrix& B = basis.constraints->B;
  const int n = basis.num_vertices();
  if (options.target_support < 1) throw Error("invalid_argument", "target support must be positive");
  const int seed = options.seed_vertex ? *options.seed_vertex : starting_vertex(B, n);
  if (seed < 0 || seed >= n) throw Error("invalid_argument", "seed vertex out of range", {seed});

  Pursuit p;
  p.support = {seed};
  // the probe direction only steers the first correlation step
  VectorXd probe = VectorXd::Zero(3 * n);
  for (int a = 0; a < 3; ++a) probe(coord_index(n, seed, a)) = options.direction(a);
  p.field = best_field(B, n, p.support, &p.residual);
  p.trace.push_back(p.residual);
  VectorXd steer = probe;
  std::vector<bool> chosen(n, false);
  chosen[seed] = true;
  while (p.residual > options.residual_tol && static_cast<int>(p.support.size()) < options.target_support) {
    const VectorXd r = B * steer;
    const VectorXd g = B.transpose() * r;
    int next = -1;
    double best = 0.0;
    for (int v = 0; v < n; ++v) {
      if (chosen[v]) continue;
      const double score = Vec3(g(coord_index(n, v, 0)), g(coord_index(n, v, 1)), g(coord_index(n, v, 2))).norm();
      if (score > best) {
        best = score;
        next = v;
      }
    }
    if (next < 0) break;  // no column correlates with the residual
    chosen[next] = true;
    p.support.push_back(next);
    double residual = 0.0;
    VectorXd field = best_field(B, n, p.support, &residual);
    p.field = std::move(field);
    p.residual = residual;
    p.trace.push_back(residual);
    steer = p.field;
  }
  return p;
}

}  // namespace

SparseMatrix graph_laplacian(const Mesh& mesh) {
  const auto nb = vertex_neighbors(mesh);
  std::vector<Eigen::Triplet<double>> trip;
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    trip.emplace_back(v, v, static_cast<double>(nb[v].size()));
    for (int w : nb[v]) trip.emplace_back(v, w, -1.0);
  }
  SparseMatrix L(mesh.num_vertices(), mesh.num_vertices());
  L.setFromTriplets(trip.begin(), trip.end());
  L.makeCompressed();
  return L;
}

SparseMatrix axis_replicated(const SparseMatrix& L) {
  const Eigen::Index n = L.rows();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(3 * L.nonZeros());
  for (int a = 0; a < 3; ++a) {
    for (Eigen::Index c = 0; c < L.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(L, c); it; ++it) trip.emplace_back(a * n + it.row(), a * n + c, it.value());
    }
  }
  SparseMatrix out(3 * n, 3 * n);
  out.setFromTriplets(trip.begin(), trip.end());
  out.makeCompressed();
  return out;
}

std::vector<int> shape_support(const VectorXd& field, double rel_tol) {
  const int n = static_cast<int>(field.size() / 3);
  std::vector<double> mag(n);
  double top = 0.0;
  for (int v = 0; v < n; ++v) {
    mag[v] = Vec3(field(v), field(n + v), field(2 * n + v)).norm();
    top = std::max(top, mag[v]);
  }
  std::vector<int> out;
  if (top == 0.0) return out;
  for (int v = 0; v < n; ++v) {
    if (mag[v] > rel_tol * top) out.push_back(v);
  }
  return out;
}

double subspace_residual(const SubspaceBasis& basis, const VectorXd& field) {
  const double norm = field.norm();
  if (norm == 0.0 || !basis.constraints) return 0.0;
  return basis.constraints->residual(field) / norm;
}

Spectrum eigenshapes(const SubspaceBasis& basis, const SparseMatrix& L, int count) {
  const int n = basis.num_vertices();
  if (L.rows() != n || L.cols() != n) throw Error("invalid_argument", "Laplacian size does not match the basis");
  if (basis.ndof == 0) throw Error("empty_subspace", "the subspace is {0}");
  Spectrum out;
  std::vector<std::pair<double, VectorXd>> pairs;
  if (basis.decoupled) {
    const int da = basis.ndof / 3;
    const MatrixXd Qa = basis.Q.block(0, 0, n, da);
    const MatrixXd K = Qa.transpose() * (L * Qa);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (K + K.transpose()));
    if (eig.info() != Eigen::Success) throw Error("numerical", "eigensolver did not converge");
    const MatrixXd shapes = Qa * eig.eigenvectors();
    for (int k = 0; k < da; ++k) {
      for (int a = 0; a < 3; ++a) {
        VectorXd s = VectorXd::Zero(3 * n);
        s.segment(a * n, n) = shapes.col(k);
        pairs.emplace_back(eig.eigenvalues()(k), std::move(s));
      }
    }
  } else {
    const SparseMatrix L3 = axis_replicated(L);
    const MatrixXd K = basis.Q.transpose() * (L3 * basis.Q);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (K + K.transpose()));
    if (eig.info() != Eigen::Success) throw Error("numerical", "eigensolver did not converge");
    const MatrixXd shapes = basis.Q * eig.eigenvectors();
    for (int k = 0; k < basis.ndof; ++k) pairs.emplace_back(eig.eigenvalues()(k), shapes.col(k));
  }
  // replicated axes already come in ascending blocks; keep the order stable
  std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  int m = static_cast<int>(pairs.size());
  if (count >= 0 && count < m) {
    m = count;
  } else if (count > m) {
    out.truncated = true;
  }
  out.shapes.resize(3 * n, m);
  for (int k = 0; k < m; ++k) {
    out.frequencies.push_back(pairs[k].first);
    out.shapes.col(k) = pairs[k].second;
  }
  return out;
}

BandpassResult bandpass_apply(const Mesh& source, const Spectrum& spectrum, double low, double high, double gain,
                              const std::vector<double>& weights) {
  if (!(low >= 0.0) || !(high >= low)) throw Error("invalid_argument", "band needs 0 <= low <= high");
  if (spectrum.shapes.rows() != 3 * source.num_vertices()) {
    throw Error("invalid_argument", "spectrum does not match the mesh");
  }
  if (!weights.empty() && weights.size() != spectrum.frequencies.size()) {
    throw Error("invalid_argument", "one weight per shape expected");
  }
  double top = 1.0;
  for (double f : spectrum.frequencies) top = std::max(top, std::abs(f));
  const double eps = 1e-9 * top;  // zero frequencies come out as +-1e-15
  BandpassResult out;
  VectorXd field = VectorXd::Zero(spectrum.shapes.rows());
  for (std::size_t k = 0; k < spectrum.frequencies.size(); ++k) {
    const double f = spectrum.frequencies[k];
    if (f < low - eps || f > high + eps) continue;
    field += (weights.empty() ? 1.0 : weights[k]) * spectrum.shapes.col(k);
    ++out.used;
  }
  if (out.used == 0) out.notice = "no eigenshape frequency inside the band";
  out.mesh = source.displaced(gain * field);
  return out;
}

Mesh linear_combination(const Mesh& source, const Spectrum& spectrum, const std::vector<double>& coefficients) {
  if (coefficients.size() > static_cast<std::size_t>(spectrum.shapes.cols())) {
    throw Error("invalid_argument", "more coefficients than shapes");
  }
  VectorXd field = VectorXd::Zero(spectrum.shapes.rows());
  for (std::size_t k = 0; k < coefficients.size(); ++k) field += coefficients[k] * spectrum.shapes.col(k);
  return source.displaced(field);
}

Shape sparse_shape(const SubspaceBasis& basis, const SparseShapeOptions& options) {
  Pursuit p = run_pursuit(basis, options);
  if (p.residual > options.residual_tol) {
    std::ostringstream msg;
    msg << "no shape on at most " << options.target_support << " vertices reaches residual "
        << options.residual_tol << " (best " << p.residual << ")";
    throw Error("infeasible", msg.str(), p.support);
  }
  Shape s;
  s.label = "sparse";
  s.residual = p.residual;
  s.support = shape_support(p.field);
  s.displacement = std::move(p.field);
  return s;
}

std::vector<double> sparse_residual_trace(const SubspaceBasis& basis, const SparseShapeOptions& options) {
  return run_pursuit(basis, options).trace;
}

Shape fundamental_shape(const SubspaceBasis& basis, const SparseMatrix& L, const VectorXd& impulse, double lambda) {
  if (lambda < 0.0) throw Error("invalid_argument", "lambda must be nonnegative");
  if (impulse.size() != basis.Q.rows()) throw Error("invalid_argument", "impulse does not match the basis");
  const MatrixXd LQ = axis_replicated(L) * basis.Q;
  MatrixXd M = lambda * (LQ.transpose() * LQ);
  M.diagonal().array() += 1.0;
  const VectorXd W = M.llt().solve(basis.Q.transpose() * impulse);
  Shape s;
  s.displacement = basis.Q * W;
  s.residual = subspace_residual(basis, s.displacement);
  s.support = shape_support(s.displacement);
  s.label = "fundamental";
  return s;
}

Shape fundamental_shape(const SubspaceBasis& basis, const SparseMatrix& L, int vertex, double lambda,
                        const Vec3& direction) {
  const int n = basis.num_vertices();
  if (vertex < 0 || vertex >= n) throw Error("invalid_argument", "vertex out of range", {vertex});
  VectorXd impulse = VectorXd::Zero(3 * n);
  for (int a = 0; a < 3; ++a) impulse(coord_index(n, vertex, a)) = direction(a);
  Shape s = fundamental_shape(basis, L, impulse, lambda);
  s.label = "fundamental(" + std::to_string(vertex) + ")";
  return s;
}

nlohmann::json spectrum_to_json(const Spectrum& spectrum) {
  return {{"frequencies", spectrum.frequencies},
          {"laplacian", spectrum.laplacian},
          {"count", spectrum.frequencies.size()},
          {"truncated", spectrum.truncated}};
}

}  // namespace pmspace
