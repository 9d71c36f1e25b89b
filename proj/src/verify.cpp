#include "pmspace/verify.hpp"

#include "pmspace/error.hpp"
#include "pmspace/topology.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numbers>
#include <sstream>

namespace pmspace {

namespace {

using Eigen::Matrix3Xd;
using Eigen::MatrixXd;

Matrix3Xd unit_centered(const Matrix3Xd& X) {
  Matrix3Xd c = X.colwise() - X.rowwise().mean();
  const double norm = c.norm();
  if (norm == 0.0) throw Error("degenerate_face", "polygon collapses to a point");
  return c / norm;
}

double third_singular_value(const Matrix3Xd& Z) {
  Eigen::JacobiSVD<MatrixXd> svd(Z);
  const auto& s = svd.singularValues();
  return s.size() >= 3 ? s(2) : 0.0;
}

Vec3 random_unit(std::mt19937& rng) {
  std::normal_distribution<double> g;
  Vec3 v(g(rng), g(rng), g(rng));
  while (v.norm() < 1e-3) v = Vec3(g(rng), g(rng), g(rng));
  return v.normalized();
}

Eigen::Matrix3d random_rotation(std::mt19937& rng) {
  std::normal_distribution<double> g;
  return Eigen::Quaterniond(g(rng), g(rng), g(rng), g(rng)).normalized().toRotationMatrix();
}

}  // namespace

std::string to_string(Relationship r) {
  switch (r) {
    case Relationship::None:
      return "none";
    case Relationship::Type1:
      return "type1";
    case Relationship::Type2:
      return "type2";
    case Relationship::Both:
      return "both";
  }
  return "none";
}

RelationshipWitness relationship_type(const Matrix3Xd& X, const Matrix3Xd& Y, double tol) {
  if (X.cols() != Y.cols()) throw Error("invalid_argument", "polygons differ in vertex count");
  if (X.cols() <= 3) throw Error("invalid_argument", "relationship types are defined for k > 3");
  const Matrix3Xd Xn = unit_centered(X), Yn = unit_centered(Y);
  const Vec3 nx = fit_plane(Xn, 1.0).normal, ny = fit_plane(Yn, 1.0).normal;

  RelationshipWitness w;
  Eigen::JacobiSVD<MatrixXd> svd(Yn, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-10);
  const MatrixXd Ypinv = svd.solve(MatrixXd::Identity(3, 3));  // k x 3
  const Eigen::Matrix3d A = Xn * Ypinv;
  w.type1_residual = (Xn - A * Yn).norm();

  const Eigen::RowVectorXd u = ny.transpose() * Xn, v = nx.transpose() * Yn;
  const double uu = u.squaredNorm(), vv = v.squaredNorm(), uv = u.dot(v);
  // |u||v| sin(angle), measured against the longer vector to avoid the
  // cancellation in sqrt(|u|^2 |v|^2 - (u.v)^2)
  w.type2_residual = vv >= uu ? (vv > 0.0 ? std::sqrt(vv) * (u - (uv / vv) * v).norm() : 0.0)
                              : std::sqrt(uu) * (v - (uv / uu) * u).norm();
  const bool t1 = w.type1_residual <= tol;
  const bool t2 = w.type2_residual <= tol;
  if (t1) w.A = A;
  if (t2) {
    if (std::sqrt(uu) <= tol && std::sqrt(vv) <= tol) {
      w.c_unconstrained = true;
    } else if (std::sqrt(vv) <= tol) {
      w.c_infinite = true;
    } else {
      w.c = uv / vv;
    }
  }
  w.kind = t1 && t2 ? Relationship::Both : t1 ? Relationship::Type1 : t2 ? Relationship::Type2 : Relationship::None;
  return w;
}

SpanResult spans_planar_space(const Matrix3Xd& X, const Matrix3Xd& Y, int samples, std::mt19937& rng, double tol) {
  const Matrix3Xd Xn = unit_centered(X), Yn = unit_centered(Y);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  SpanResult out;
  for (int s = 0; s < samples; ++s) {
    const double t = angle(rng);
    out.max_nonplanarity = std::max(out.max_nonplanarity, third_singular_value(std::cos(t) * Xn + std::sin(t) * Yn));
  }
  out.spans = out.max_nonplanarity <= tol;
  return out;
}

Matrix3Xd random_planar_polygon(int k, std::mt19937& rng) {
  std::normal_distribution<double> g;
  const Vec3 n = random_unit(rng);
  const Vec3 e1 = n.unitOrthogonal(), e2 = n.cross(e1);
  const Vec3 origin(g(rng), g(rng), g(rng));
  Matrix3Xd P(3, k);
  for (int i = 0; i < k; ++i) P.col(i) = origin + g(rng) * e1 + g(rng) * e2;
  return P;
}

Matrix3Xd type1_partner(const Matrix3Xd& Y, std::mt19937& rng) {
  std::normal_distribution<double> g;
  Eigen::Matrix3d A;
  do {
    for (int i = 0; i < 9; ++i) A(i / 3, i % 3) = g(rng);
  } while (std::abs(A.determinant()) < 0.1);
  return (A * Y).colwise() + Vec3(g(rng), g(rng), g(rng));
}

Matrix3Xd type2_partner(const Matrix3Xd& Y, const Vec3& normal_x, double c, std::mt19937& rng) {
  std::normal_distribution<double> g;
  const Matrix3Xd Yc = Y.colwise() - Y.rowwise().mean();
  const Vec3 ny = fit_plane(Y, Yc.norm()).normal;
  const Vec3 nx = normal_x.normalized();
  const Vec3 origin(g(rng), g(rng), g(rng));
  Vec3 d = nx.cross(ny);
  Matrix3Xd X(3, Y.cols());
  if (d.norm() < 1e-8) {
    // parallel planes: both sides vanish, any polygon in the plane works
    const Vec3 e1 = nx.unitOrthogonal(), e2 = nx.cross(e1);
    for (Eigen::Index i = 0; i < X.cols(); ++i) X.col(i) = origin + g(rng) * e1 + g(rng) * e2;
    return X;
  }
  d.normalize();
  const Vec3 w = ny - ny.dot(nx) * nx;
  for (Eigen::Index i = 0; i < X.cols(); ++i) {
    const double t = c * nx.dot(Yc.col(i)) / ny.dot(w);
    X.col(i) = origin + t * w + g(rng) * d;
  }
  return X;
}

PairAudit theorem1_audit(int pairs, std::uint32_t seed, double tol) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> sides(4, 8);
  std::normal_distribution<double> g;
  PairAudit out;
  for (int i = 0; i < pairs; ++i) {
    const int k = sides(rng);
    const Matrix3Xd Y = random_planar_polygon(k, rng);
    Matrix3Xd X;
    std::string label;
    switch (i % 4) {
      case 0:
        X = type1_partner(Y, rng);
        label = "type1";
        break;
      case 1:
        X = type2_partner(Y, random_unit(rng), g(rng), rng);
        label = "type2";
        break;
      case 2:
        X = type2_partner(Y, fit_plane(Y, 1.0).normal, 0.0, rng);
        label = "coplanar";
        break;
      default:
        X = random_planar_polygon(k, rng);
        label = "unrelated";
        break;
    }
    const RelationshipWitness w = relationship_type(X, Y, tol);
    const SpanResult s = spans_planar_space(X, Y, 50, rng, tol);
    ++out.pairs;
    switch (w.kind) {
      case Relationship::Type1:
        ++out.type1;
        break;
      case Relationship::Type2:
        ++out.type2;
        break;
      case Relationship::Both:
        ++out.both;
        break;
      case Relationship::None:
        ++out.none;
        break;
    }
    const bool related = w.kind != Relationship::None;
    if (related == s.spans) {
      ++out.agreements;
    } else {
      std::ostringstream msg;
      msg << "pair " << i << " (" << label << ", k=" << k << "): witness " << to_string(w.kind)
          << " but nonplanarity " << s.max_nonplanarity;
      out.disagreements.push_back(msg.str());
    }
  }
  return out;
}

MaximalityReport maximality_probe(const Mesh& mesh, const CaseAssignment& assignment, int trials,
                                  std::uint32_t seed) {
  MaximalityReport out;
  const SubspaceBasis basis = build_subspace(mesh, assignment);
  std::vector<std::pair<CaseKind, SubspaceBasis>> others;
  for (CaseKind kind : {CaseKind::Affine, CaseKind::Parallel, CaseKind::Vertical}) {
    others.emplace_back(kind, build_subspace(mesh, CaseAssignment::uniform(mesh, kind)));
  }
  for (std::size_t i = 0; i < others.size(); ++i) {
    for (std::size_t j = i + 1; j < others.size(); ++j) {
      out.containments.push_back(
          {others[i].first, others[j].first, containment_check(others[i].second, others[j].second)});
    }
  }

  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Eigen::VectorXd x0 = mesh.vectorized();
  const double size = x0.norm();
  for (int t = 0; t < trials; ++t) {
    ++out.trials;
    // a PM sharing the topology: an element of another case's subspace or a
    // rotated copy of the source
    Eigen::VectorXd z;
    const std::size_t pick = static_cast<std::size_t>(t) % (others.size() + 1);
    if (pick < others.size() && others[pick].second.ndof > 0) {
      const auto& Q = others[pick].second.Q;
      Eigen::VectorXd w(Q.cols());
      for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = g(rng);
      z = x0 + 0.3 * size * (Q * w).normalized();
    } else {
      const Eigen::Matrix3d R = random_rotation(rng);
      z = mesh.with_vertices(R * mesh.vertices()).vectorized();
    }
    const Eigen::VectorXd outside = z - project(basis, z);
    if (outside.norm() <= 1e-6 * z.norm()) {
      ++out.rejected;
      continue;
    }
    bool found = false;
    for (int s = 0; s < 20 && !found; ++s) {
      Eigen::VectorXd w(basis.ndof);
      for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = g(rng);
      Eigen::VectorXd inside = basis.ndof ? Eigen::VectorXd(basis.Q * w) : Eigen::VectorXd::Zero(x0.size());
      if (inside.norm() > 0.0) inside *= 0.3 * size / inside.norm();
      const Eigen::VectorXd combo = x0 + inside + u(rng) * (z - x0) + 0.3 * u(rng) * z;
      try {
        found = planarity_report(mesh.with_vectorized(combo)).max > 1e-8;
      } catch (const Error&) {
        // a collapsed face says nothing either way
      }
    }
    if (found) ++out.certified;
  }
  const int tested = out.trials - out.rejected;
  out.verdict = tested > 0 && out.certified == tested
                    ? "certified in sampled directions"
                    : "not certified in " + std::to_string(tested - out.certified) + " sampled directions";
  return out;
}

Eigen::Matrix3d reference_stencil() {
  Eigen::Matrix3d s;
  s << 0.25, -0.5, 0.25, -0.5, 1.0, -0.5, 0.25, -0.5, 0.25;
  return s;
}

StencilReport stencil_check(int m, int n, int lifts, std::uint32_t seed) {
  if (m < 4 || n < 4) throw Error("invalid_argument", "stencil check needs at least a 4 x 4 grid");
  const Mesh grid = quad_grid(m, n);
  const ConstraintMatrix cm = assemble(grid, CaseAssignment::uniform(grid, CaseKind::Affine));
  if (!cm.decoupled) throw Error("numerical", "affine grid operator did not decouple");
  // z block: columns of the z axis
  const SparseMatrix Bz = cm.B.middleCols(2 * grid.num_vertices(), grid.num_vertices());
  const SparseMatrix L = Bz.transpose() * Bz;
  const int ci = m / 2, cj = n / 2, v = cj * m + ci;

  StencilReport out;
  for (int dj = -1; dj <= 1; ++dj) {
    for (int di = -1; di <= 1; ++di) out.stencil(dj + 1, di + 1) = L.coeff(v, (cj + dj) * m + ci + di);
  }
  for (SparseMatrix::InnerIterator it(L, v); it; ++it) {
    const int i = static_cast<int>(it.row()) % m, j = static_cast<int>(it.row()) / m;
    if ((std::abs(i - ci) > 1 || std::abs(j - cj) > 1) && std::abs(it.value()) > 1e-12) out.local = false;
  }
  out.scale = out.stencil(1, 1);
  out.max_deviation = out.scale > 0.0 ? (out.stencil - out.scale * reference_stencil()).cwiseAbs().maxCoeff() / out.scale
                                      : std::numeric_limits<double>::infinity();

  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd z(grid.num_vertices());
  for (int t = 0; t <= lifts; ++t) {
    std::vector<double> f(m), gg(n);
    for (int i = 0; i < m; ++i) f[i] = t == 0 ? std::sin(static_cast<double>(i)) : u(rng);
    for (int j = 0; j < n; ++j) gg[j] = t == 0 ? std::cos(static_cast<double>(j)) : u(rng);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < m; ++i) z(j * m + i) = f[i] + gg[j];
    }
    out.separable_residual = std::max(out.separable_residual, (Bz * z).norm());
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) z(j * m + i) = static_cast<double>(i) * j;
  }
  out.bilinear_residual = (Bz * z).norm();
  return out;
}

Regular3Report regular3_checks(const Mesh& mesh) {
  Regular3Report out;
  out.num_faces = mesh.num_faces();
  out.affine_ndof = build_subspace(mesh, CaseAssignment::uniform(mesh, CaseKind::Affine)).ndof;
  out.parallel_ndof = build_subspace(mesh, CaseAssignment::uniform(mesh, CaseKind::Parallel)).ndof;
  bool regular = true;
  for (const auto& nb : vertex_neighbors(mesh)) regular &= nb.size() == 3;
  if (!is_closed(mesh)) {
    out.notice = "mesh has a boundary; check skipped";
  } else if (!regular) {
    out.notice = "mesh is not 3-regular; check skipped";
  } else {
    out.applicable = true;
  }
  out.affine_at_most_12 = out.affine_ndof <= 12;
  out.affine_equals_12 = out.affine_ndof == 12;
  out.parallel_equals_faces = out.parallel_ndof == out.num_faces;
  return out;
}

Table1Report table1_audit(const std::vector<NamedMesh>& corpus) {
  Table1Report out;
  for (const auto& [name, mesh] : corpus) {
    const MeshCounts c = counts(mesh);
    const Family fam = mesh_family(mesh);
    for (CaseKind kind : {CaseKind::Affine, CaseKind::Parallel, CaseKind::Vertical}) {
      Table1Row row;
      row.mesh = name;
      row.family = fam;
      row.kind = kind;
      row.ndof = build_subspace(mesh, CaseAssignment::uniform(mesh, kind)).ndof;
      row.bound = min_ndof_bound(c, kind);
      if (fam != Family::Other) {
        row.nfv = table1_min_nfv(fam, kind, c.num_vertices, c.num_boundary_vertices, c.num_boundary_loops,
                                 c.genus_paper);
      }
      row.ok = row.ndof >= row.bound && (!row.nfv || *row.nfv <= Rational(row.ndof, 3));
      if (!row.ok) ++out.violations;
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

nlohmann::json to_json(const PairAudit& r) {
  return {{"pairs", r.pairs},       {"agreements", r.agreements}, {"type1", r.type1},
          {"type2", r.type2},       {"both", r.both},             {"none", r.none},
          {"disagreements", r.disagreements}, {"passed", r.passed()}};
}

nlohmann::json to_json(const MaximalityReport& r) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : r.containments) {
    pairs.push_back({{"a", to_string(p.a)},
                     {"b", to_string(p.b)},
                     {"relation", to_string(p.result.relation)},
                     {"dim_a", p.result.dim_a},
                     {"dim_b", p.result.dim_b},
                     {"dim_intersection", p.result.dim_intersection}});
  }
  return {{"trials", r.trials},   {"certified", r.certified}, {"rejected", r.rejected},
          {"verdict", r.verdict}, {"containments", pairs}};
}

nlohmann::json to_json(const StencilReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < 3; ++i) rows.push_back({r.stencil(i, 0), r.stencil(i, 1), r.stencil(i, 2)});
  return {{"stencil", rows},
          {"scale", r.scale},
          {"max_deviation", r.max_deviation},
          {"local", r.local},
          {"separable_residual", r.separable_residual},
          {"bilinear_residual", r.bilinear_residual},
          {"passed", r.passed()}};
}

nlohmann::json to_json(const Regular3Report& r) {
  return {{"applicable", r.applicable},
          {"notice", r.notice},
          {"num_faces", r.num_faces},
          {"affine_ndof", r.affine_ndof},
          {"parallel_ndof", r.parallel_ndof},
          {"affine_at_most_12", r.affine_at_most_12},
          {"affine_equals_12", r.affine_equals_12},
          {"parallel_equals_faces", r.parallel_equals_faces},
          {"passed", r.passed()}};
}

nlohmann::json to_json(const Table1Report& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"mesh", row.mesh},
                    {"family", to_string(row.family)},
                    {"case", to_string(row.kind)},
                    {"ndof", row.ndof},
                    {"bound", row.bound},
                    {"nfv_table", row.nfv ? nlohmann::json(row.nfv->str()) : nlohmann::json()},
                    {"ok", row.ok}});
  }
  return {{"rows", rows}, {"violations", r.violations}, {"passed", r.violations == 0}};
}

nlohmann::json run_verify_suite(const std::string& suite, std::uint32_t seed, bool* passed) {
  const bool all = suite == "all";
  bool ok = true;
  bool known = all;
  nlohmann::json out;
  if (all || suite == "theorem1") {
    known = true;
    const PairAudit r = theorem1_audit(200, seed);
    out["theorem1"] = to_json(r);
    ok &= r.passed();
  }
  if (all || suite == "stencil") {
    known = true;
    nlohmann::json grids = nlohmann::json::array();
    for (int size : {4, 6, 10}) {
      const StencilReport r = stencil_check(size, size, 20, seed + size);
      nlohmann::json j = to_json(r);
      j["grid"] = std::to_string(size) + "x" + std::to_string(size);
      grids.push_back(j);
      ok &= r.passed();
    }
    out["stencil"] = grids;
  }
  if (all || suite == "regular3") {
    known = true;
    nlohmann::json meshes = nlohmann::json::array();
    for (const auto& [name, mesh] : closed_3regular_corpus()) {
      const Regular3Report r = regular3_checks(mesh);
      nlohmann::json j = to_json(r);
      j["mesh"] = name;
      meshes.push_back(j);
      j["passed"] = r.applicable && r.passed();
      ok &= j["passed"].get<bool>();
    }
    const Regular3Report sub = regular3_checks(halfedge_subdivide(cube()));
    nlohmann::json j = to_json(sub);
    j["mesh"] = "cube_subdivided";
    j["passed"] = !sub.applicable;
    meshes.push_back(j);
    ok &= !sub.applicable;
    out["regular3"] = meshes;
  }
  if (all || suite == "table1") {
    known = true;
    const Table1Report r = table1_audit(standard_corpus());
    out["table1"] = to_json(r);
    ok &= r.violations == 0;
  }
  if (all || suite == "maximality") {
    known = true;
    nlohmann::json probes = nlohmann::json::array();
    for (const char* name : {"cube", "open_box", "grid5"}) {
      const Mesh m = corpus_mesh(name);
      const MaximalityReport r = maximality_probe(m, CaseAssignment::uniform(m, CaseKind::Affine), 20, seed);
      nlohmann::json j = to_json(r);
      j["mesh"] = name;
      j["case"] = "affine";
      j["passed"] = r.certified == r.trials - r.rejected;
      probes.push_back(j);
      ok &= j["passed"].get<bool>();
    }
    out["maximality"] = probes;
  }
  if (!known) throw Error("invalid_argument", "unknown verify suite '" + suite + "'");
  out["passed"] = ok;
  if (passed) *passed = ok;
  return out;
}

}  // namespace pmspace
