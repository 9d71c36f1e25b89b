#include "pmspace/dof.hpp"

#include "pmspace/error.hpp"
#include "pmspace/topology.hpp"

#include <numeric>

namespace pmspace {

Rational::Rational(long long n, long long d) {
  if (d == 0) throw Error("invalid_argument", "zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  const long long g = std::gcd(n < 0 ? -n : n, d);
  num = g ? n / g : n;
  den = g ? d / g : d;
}

std::string Rational::str() const {
  return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
}

long long min_ndof_bound(const MeshCounts& c, CaseKind kind) {
  const long long nv = c.num_vertices, nf = c.num_faces, nc = c.num_corners;
  switch (kind) {
    case CaseKind::Affine:
      return 3 * (nv + 3 * nf - nc);
    case CaseKind::Parallel:
      return 3 * nv - nc + nf;
    case CaseKind::Vertical:
      return 3 * nv - 2 * (nc - 2 * nf);
  }
  return 0;
}

std::optional<CaseKind> uniform_kind(const Mesh& mesh, const CaseAssignment& assignment) {
  std::optional<FaceCase> first;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    if (mesh.face(f).size() == 3) continue;
    if (!first) {
      first = assignment[f];
    } else if (!(assignment[f] == *first)) {
      return std::nullopt;
    }
  }
  if (!first) return CaseKind::Affine;
  switch (first->kind) {
    case FaceCase::Kind::Affine:
      return CaseKind::Affine;
    case FaceCase::Kind::Parallel:
      return CaseKind::Parallel;
    case FaceCase::Kind::PrescribedNormal:
      // the closed-form bound only depends on the row count, any normal works
      return CaseKind::Vertical;
  }
  return std::nullopt;
}

DofBound ndof_bound(const Mesh& mesh, const CaseAssignment& assignment) {
  if (auto kind = uniform_kind(mesh, assignment)) {
    bool has_triangles = false;
    for (const auto& f : mesh.faces()) has_triangles |= f.size() == 3;
    if (!has_triangles) return {min_ndof_bound(counts(mesh), *kind), false};
  }
  long long rows = 0;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const long long k = static_cast<long long>(mesh.face(f).size());
    if (k == 3) continue;
    switch (assignment[f].kind) {
      case FaceCase::Kind::Affine:
        rows += 3 * (k - 3);
        break;
      case FaceCase::Kind::Parallel:
        rows += k - 1;
        break;
      case FaceCase::Kind::PrescribedNormal:
        rows += 2 * (k - 2);
        break;
    }
  }
  return {3LL * mesh.num_vertices() - rows, true};
}

std::string to_string(Family family) {
  switch (family) {
    case Family::Quad:
      return "quad";
    case Family::Hex:
      return "hex";
    case Family::Other:
      return "other";
  }
  return "other";
}

Family mesh_family(const Mesh& mesh) {
  if (mesh.num_faces() == 0) return Family::Other;
  const std::size_t k = mesh.face(0).size();
  for (const auto& f : mesh.faces()) {
    if (f.size() != k) return Family::Other;
  }
  if (k == 4) return Family::Quad;
  if (k == 6) return Family::Hex;
  return Family::Other;
}

Rational table1_min_nfv(Family family, CaseKind kind, long long nv, long long nb, long long b, long long g) {
  if (kind == CaseKind::Vertical) {
    return Rational(-nv, 3) + Rational(2 * nb, 3) + Rational(4 * b, 3) + Rational(8 * g, 3);
  }
  switch (family) {
    case Family::Quad:
      // affine and parallel coincide on quads
      return Rational(nb, 2) + Rational(b) + Rational(2 * g);
    case Family::Hex:
      if (kind == CaseKind::Affine) {
        return Rational(-nv, 2) + Rational(3 * nb, 4) + Rational(3 * b, 2) + Rational(3 * g);
      }
      return Rational(nv, 6) + Rational(5 * nb, 12) + Rational(5 * b, 6) + Rational(5 * g, 3);
    case Family::Other:
      break;
  }
  throw Error("invalid_argument", "table entries exist only for pure quad and hex meshes");
}

std::vector<ReassignmentSuggestion> reassignment_suggestions(const Mesh& mesh, const CaseAssignment& assignment) {
  const auto neighbors = vertex_neighbors(mesh);
  std::vector<bool> on_boundary(mesh.num_vertices(), false);
  for (const auto& loop : boundary_loops(mesh)) {
    for (int v : loop) on_boundary[v] = true;
  }
  std::vector<ReassignmentSuggestion> out;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    if (face.size() == 3 || assignment[f].kind != FaceCase::Kind::Affine) continue;
    if (face.size() > 4) {
      out.push_back({f, "affine face with " + std::to_string(face.size()) + " edges", FaceCase::parallel()});
      continue;
    }
    for (int v : face) {
      if (!on_boundary[v] && neighbors[v].size() == 3) {
        out.push_back({f, "affine face touches interior degree-3 vertex " + std::to_string(v), FaceCase::parallel()});
        break;
      }
    }
  }
  return out;
}

}  // namespace pmspace
