#pragma once

#include "pmspace/basis.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pmspace {

/// Uniform graph Laplacian (degree minus adjacency) of the vertex graph, n x n.
SparseMatrix graph_laplacian(const Mesh& mesh);
/// The same operator acting on every axis of a vectorized field (3n x 3n).
SparseMatrix axis_replicated(const SparseMatrix& L);

/// Displacement field with its provenance and ||B x|| / ||x||.
struct Shape {
  Eigen::VectorXd displacement;
  std::string label;
  double residual = 0.0;
  std::vector<int> support;  // vertices that move
};

/// Vertices whose displacement exceeds rel_tol times the largest one.
std::vector<int> shape_support(const Eigen::VectorXd& field, double rel_tol = 1e-8);
double subspace_residual(const SubspaceBasis& basis, const Eigen::VectorXd& field);

struct Spectrum {
  std::vector<double> frequencies;  // ascending
  Eigen::MatrixXd shapes;           // 3n x m, orthonormal columns
  std::string laplacian = "uniform";
  bool truncated = false;           // fewer shapes than requested
};

/// Eigenpairs of Q^T L Q mapped back by Q, ascending. `count` < 0 asks for all.
/// Decoupled bases are solved on one axis block and replicated.
Spectrum eigenshapes(const SubspaceBasis& basis, const SparseMatrix& L, int count = -1);

struct BandpassResult {
  Mesh mesh;
  int used = 0;        // shapes inside the band
  std::string notice;  // set when the band is empty
};

/// source + gain * sum of the shapes with low <= frequency <= high. `weights`
/// (one per shape, default 1) scale individual shapes.
BandpassResult bandpass_apply(const Mesh& source, const Spectrum& spectrum, double low, double high, double gain,
                              const std::vector<double>& weights = {});

/// source + sum_k coefficients[k] * shape_k.
Mesh linear_combination(const Mesh& source, const Spectrum& spectrum, const std::vector<double>& coefficients);

struct SparseShapeOptions {
  std::optional<int> seed_vertex;
  Vec3 direction = Vec3::UnitZ();  // initial probe at the seed
  int target_support = 8;          // vertex budget
  double residual_tol = 1e-10;     // stop as soon as ||Bx||/||x|| reaches this
};

/// Greedy group pursuit over vertices: grow a vertex set by correlation with
/// the current residual and take the least-residual field supported on it
/// (smallest right singular vector of the selected columns of B). Without a
/// seed the search starts at the vertex whose own columns are closest to
/// admissible.
///
/// Throws Error("infeasible") carrying the best residual when the budget is
/// exhausted above residual_tol.
Shape sparse_shape(const SubspaceBasis& basis, const SparseShapeOptions& options = {});

/// Residual after each greedy step of sparse_shape (for diagnostics).
std::vector<double> sparse_residual_trace(const SubspaceBasis& basis, const SparseShapeOptions& options);

/// argmin ||X - delta_i||^2 + lambda ||L X||^2 over the subspace, where delta_i
/// moves vertex i along `direction`.
Shape fundamental_shape(const SubspaceBasis& basis, const SparseMatrix& L, int vertex, double lambda = 1.0,
                        const Vec3& direction = Vec3::UnitZ());
/// Same with an arbitrary impulse field.
Shape fundamental_shape(const SubspaceBasis& basis, const SparseMatrix& L, const Eigen::VectorXd& impulse,
                        double lambda);

/// Spectrum export: {"frequencies":[...], "laplacian":..., "count":m}.
nlohmann::json spectrum_to_json(const Spectrum& spectrum);

}  // namespace pmspace
