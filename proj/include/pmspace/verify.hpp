#pragma once

#include "pmspace/basis.hpp"
#include "pmspace/corpus.hpp"
#include "pmspace/dof.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace pmspace {

// ---------------------------------------------------------------------------
// Pairs of polygons

enum class Relationship { None, Type1, Type2, Both };
std::string to_string(Relationship r);

/// Type 1: X = A Y (centered). Type 2: N_Y X = c N_X Y, read projectively so
/// that c = infinity (N_X Y = 0 with N_Y X != 0) also counts.
struct RelationshipWitness {
  Relationship kind = Relationship::None;
  std::optional<Eigen::Matrix3d> A;
  std::optional<double> c;        // empty when unconstrained or infinite
  bool c_unconstrained = false;   // both sides vanish
  bool c_infinite = false;
  double type1_residual = 0.0;    // ||X - X Y^+ Y|| with ||X|| = 1
  double type2_residual = 0.0;    // |u ^ v| / (|X| |Y|)
};

/// Both polygons are centered and scaled to unit Frobenius norm first.
RelationshipWitness relationship_type(const Eigen::Matrix3Xd& X, const Eigen::Matrix3Xd& Y, double tol = 1e-8);

struct SpanResult {
  bool spans = false;
  double max_nonplanarity = 0.0;  // third singular value of the unit-normalized combination
};

/// Samples (alpha, beta) on the unit circle and checks alpha X + beta Y.
SpanResult spans_planar_space(const Eigen::Matrix3Xd& X, const Eigen::Matrix3Xd& Y, int samples, std::mt19937& rng,
                              double tol = 1e-8);

/// Random planar k-gon in a random plane.
Eigen::Matrix3Xd random_planar_polygon(int k, std::mt19937& rng);
/// X = A Y + t with A random.
Eigen::Matrix3Xd type1_partner(const Eigen::Matrix3Xd& Y, std::mt19937& rng);
/// Vertices slide along N_X x N_Y on the plane with normal `normal_x`, placed
/// so that N_Y X = c N_X Y.
Eigen::Matrix3Xd type2_partner(const Eigen::Matrix3Xd& Y, const Vec3& normal_x, double c, std::mt19937& rng);

struct PairAudit {
  int pairs = 0;
  int agreements = 0;
  int type1 = 0, type2 = 0, both = 0, none = 0;
  std::vector<std::string> disagreements;
  bool passed() const { return pairs > 0 && agreements == pairs; }
};

/// Generated type-1, type-2 (incl. coplanar) and unrelated pairs, checking
/// spans_planar_space against relationship_type on each.
PairAudit theorem1_audit(int pairs, std::uint32_t seed, double tol = 1e-8);

// ---------------------------------------------------------------------------
// Mesh-level checks

struct MaximalityReport {
  int trials = 0;
  int certified = 0;  // sampled directions where a non-planar combination was found
  int rejected = 0;   // candidate PMs already inside the subspace
  struct Pair {
    CaseKind a, b;
    ContainmentResult result;
  };
  std::vector<Pair> containments;
  /// "certified in sampled directions", never "proven".
  std::string verdict;
};

MaximalityReport maximality_probe(const Mesh& mesh, const CaseAssignment& assignment, int trials,
                                  std::uint32_t seed);

struct StencilReport {
  Eigen::Matrix3d stencil;  // rows: y-1, y, y+1; cols: x-1, x, x+1
  double scale = 0.0;
  double max_deviation = 0.0;     // max |stencil - scale * reference| / scale
  bool local = true;              // no coupling beyond the 3x3 neighbourhood
  double separable_residual = 0.0;  // worst ||B z|| over random f(x)+g(y)
  double bilinear_residual = 0.0;   // ||B z|| for z = x y
  bool passed() const {
    return local && scale > 0.0 && max_deviation <= 1e-10 && separable_residual <= 1e-10 &&
           bilinear_residual > 1e-3;
  }
};

/// Affine case on an m x n vertex grid, z block of B.
StencilReport stencil_check(int m, int n, int lifts, std::uint32_t seed);
Eigen::Matrix3d reference_stencil();

struct Regular3Report {
  bool applicable = false;
  std::string notice;
  int num_faces = 0;
  int affine_ndof = 0;
  int parallel_ndof = 0;
  bool affine_at_most_12 = false;
  bool affine_equals_12 = false;
  bool parallel_equals_faces = false;
  bool passed() const { return !applicable || (affine_at_most_12 && parallel_equals_faces); }
};

Regular3Report regular3_checks(const Mesh& mesh);

struct Table1Row {
  std::string mesh;
  Family family = Family::Other;
  CaseKind kind = CaseKind::Affine;
  int ndof = 0;
  long long bound = 0;
  std::optional<Rational> nfv;  // tabulated minimum, pure quad/hex only
  bool ok = false;
};

struct Table1Report {
  std::vector<Table1Row> rows;
  int violations = 0;
};

Table1Report table1_audit(const std::vector<NamedMesh>& corpus);

nlohmann::json to_json(const PairAudit& r);
nlohmann::json to_json(const MaximalityReport& r);
nlohmann::json to_json(const StencilReport& r);
nlohmann::json to_json(const Regular3Report& r);
nlohmann::json to_json(const Table1Report& r);

/// Runs a named audit ("theorem1", "stencil", "regular3", "table1",
/// "maximality" or "all"). Returns the JSON report; `passed` is false when any
/// audit fails.
nlohmann::json run_verify_suite(const std::string& suite, std::uint32_t seed, bool* passed);

}  // namespace pmspace
