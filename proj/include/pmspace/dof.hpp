#pragma once

#include "pmspace/cases.hpp"
#include "pmspace/mesh.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pmspace {

/// Exact fraction with a positive denominator, kept in lowest terms.
struct Rational {
  long long num = 0;
  long long den = 1;

  Rational() = default;
  Rational(long long n, long long d = 1);

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;

  Rational operator+(const Rational& o) const { return {num * o.den + o.num * den, den * o.den}; }
  Rational operator-(const Rational& o) const { return {num * o.den - o.num * den, den * o.den}; }
  Rational operator*(const Rational& o) const { return {num * o.num, den * o.den}; }
  bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
  bool operator<=(const Rational& o) const { return num * o.den <= o.num * den; }
};

/// Lower bound on the subspace dimension for a non-mixed assignment:
///   Affine   3(N_v + 3N_f - N_c)
///   Parallel 3N_v - N_c + N_f
///   Vertical 3N_v - 2(N_c - 2N_f)
/// May be negative.
long long min_ndof_bound(const MeshCounts& counts, CaseKind kind);

struct DofBound {
  long long value = 0;
  bool heuristic = false;  // mixed assignment: per-face row count sum
};

/// Closed-form bound when the assignment is non-mixed; otherwise 3N_v minus
/// the per-face row counts (3(k-3) affine, k-1 parallel, 2(k-2) prescribed),
/// flagged heuristic.
DofBound ndof_bound(const Mesh& mesh, const CaseAssignment& assignment);

/// The kind shared by every constrained face, if any.
std::optional<CaseKind> uniform_kind(const Mesh& mesh, const CaseAssignment& assignment);

enum class Family { Quad, Hex, Other };
std::string to_string(Family family);
Family mesh_family(const Mesh& mesh);

/// Minimal number of free vertices tabulated for pure quad and hex meshes.
Rational table1_min_nfv(Family family, CaseKind kind, long long nv, long long nb, long long b, long long g);

struct ReassignmentSuggestion {
  int face = -1;
  std::string reason;
  FaceCase suggested;
};

/// Faces worth moving to another case: affine faces with more than four
/// edges or touching an interior degree-3 vertex lose freedom and are suggested as
/// parallel.
std::vector<ReassignmentSuggestion> reassignment_suggestions(const Mesh& mesh, const CaseAssignment& assignment);

}  // namespace pmspace
