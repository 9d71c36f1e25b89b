#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "pmspace/basis.hpp"
#include "pmspace/corpus.hpp"
#include "pmspace/dof.hpp"
#include "pmspace/error.hpp"
#include "pmspace/topology.hpp"

#include <random>
#include <sstream>

using namespace pmspace;

namespace {

const CaseKind kKinds[] = {CaseKind::Affine, CaseKind::Parallel, CaseKind::Vertical};

Eigen::Matrix3Xd centered(const Eigen::Matrix3Xd& X) { return X.colwise() - X.rowwise().mean(); }

Eigen::VectorXd local_vec(const Eigen::Matrix3Xd& X) {
  const int k = static_cast<int>(X.cols());
  Eigen::VectorXd v(3 * k);
  for (int a = 0; a < 3; ++a) v.segment(a * k, k) = X.row(a).transpose();
  return v;
}

Eigen::Matrix3Xd planar_hexagon() {
  const Mesh h = hex_patch(0);
  Eigen::Matrix3d R = Eigen::AngleAxisd(0.4, Vec3(1, 2, 0.5).normalized()).toRotationMatrix();
  Eigen::Matrix3Xd X = R * h.face_vertices(0);
  X.row(0) *= 1.3;  // break the symmetry
  return X;
}

}  // namespace

TEST_CASE("affine block kills affine images") {
  std::mt19937 rng(1);
  const Eigen::Matrix3Xd Y = quad_grid(2, 2).face_vertices(0);
  const FaceBlock b = build_face_constraints(Y, FaceCase::affine(), 1.0);
  CHECK(b.rows.rows() == 3);
  for (int t = 0; t < 10; ++t) {
    const Eigen::Matrix3d A = oracle::random_matrix(3, 3, rng);
    const Eigen::Matrix3Xd X = (A * Y).colwise() + Vec3(oracle::random_vector(3, rng));
    CHECK((b.rows * local_vec(X)).norm() <= 1e-12);
  }
  // orthonormal rows
  CHECK((b.rows * b.rows.transpose() - Eigen::MatrixXd::Identity(3, 3)).norm() <= 1e-12);
}

TEST_CASE("parallel block accepts normal translation") {
  const Eigen::Matrix3Xd Y = planar_hexagon();
  const FacePlane p = fit_plane(Y, 1.0);
  const FaceBlock b = build_face_constraints(Y, FaceCase::parallel(), 1.0);
  CHECK(b.rows.rows() == 5);
  const Eigen::Matrix3Xd X = Y.colwise() + 0.7 * p.normal;
  CHECK((b.rows * local_vec(X)).norm() <= 1e-12);
}

TEST_CASE("prescribed-normal block against a dense construction") {
  const Eigen::Matrix3Xd Y = planar_hexagon();
  const int k = 6;
  const FaceBlock b = build_face_constraints(Y, FaceCase::vertical(), 1.0);
  REQUIRE(b.derivation);
  const ConstraintDerivation& d = *b.derivation;
  const Eigen::Matrix3Xd Yc = centered(Y);
  CHECK((Yc - d.hinge * d.y1 - d.in_plane * d.y2).norm() <= 1e-10);
  CHECK((d.y2 * d.y2_null).norm() <= 1e-12);

  // brute force: the map X -> vec((X C x N) M) column by column
  const Vec3 n_y = fit_plane(Y, 1.0).normal;
  const Vec3 N = Vec3::UnitZ().cross(n_y).normalized();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(centered(Y).row(0) * 0 + (N.cross(n_y)).transpose() * Yc),
                                        Eigen::ComputeFullV);
  const Eigen::MatrixXd M = svd.matrixV().rightCols(k - 1);
  Eigen::MatrixXd op(3 * (k - 1), 3 * k);
  for (int c = 0; c < 3 * k; ++c) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(3 * k);
    e(c) = 1.0;
    Eigen::Matrix3Xd X(3, k);
    for (int a = 0; a < 3; ++a) X.row(a) = e.segment(a * k, k).transpose();
    const Eigen::Matrix3Xd Xc = centered(X);
    Eigen::Matrix3Xd cross(3, k);
    for (int i = 0; i < k; ++i) cross.col(i) = Vec3(Xc.col(i)).cross(N);
    const Eigen::MatrixXd out = cross * M;
    for (int j = 0; j < k - 1; ++j) op.block(3 * j, c, 3, 1) = out.col(j);
  }
  const int oracle_rank = 3 * k - oracle::nullity(op);
  CHECK(b.rows.rows() == oracle_rank);
  CHECK(oracle::nullity(b.rows) == oracle::nullity(op));
  CHECK(oracle::nullity(op) == 10);
  // same row space
  CHECK((op - op * b.rows.transpose() * b.rows).norm() <= 1e-10 * op.norm());
  // the source face satisfies its own block
  CHECK((b.rows * local_vec(Y)).norm() <= 1e-12);
  // the target normal is reachable: a rotation about the hinge is in the block's kernel
  const Eigen::Matrix3d R = Eigen::AngleAxisd(0.3, N).toRotationMatrix();
  CHECK((b.rows * local_vec(R * Y)).norm() <= 1e-12);
}

TEST_CASE("prescribed normal parallel to the source falls back") {
  const Eigen::Matrix3Xd Y = quad_grid(2, 2).face_vertices(0);
  const FaceBlock b = build_face_constraints(Y, FaceCase::vertical(), 1.0);
  CHECK(b.fell_back);
  CHECK(b.applied == FaceCase::parallel());
}

TEST_CASE("assembly") {
  Eigen::Matrix3Xd V(3, 4);
  V << 0, 1, 0, 1, 0, 0, 1, 1, 0, 0.3, 0.1, 1;
  const Mesh tris(V, {{0, 1, 2}, {1, 3, 2}});
  const ConstraintMatrix t = assemble(tris, CaseAssignment::uniform(tris, CaseKind::Affine));
  CHECK(t.rows() == 0);
  CHECK(nullspace_basis(t).ndof == 12);

  const Mesh c = cube();
  CHECK(assemble(c, CaseAssignment::uniform(c, CaseKind::Affine)).decoupled);
  const ConstraintMatrix par = assemble(c, CaseAssignment::uniform(c, CaseKind::Parallel));
  CHECK_FALSE(par.decoupled);
  // row structure: each parallel face block is the reduced edge operator
  const Eigen::MatrixXd B = oracle::dense(par.B);
  for (const FaceRows& fr : par.provenance) {
    CHECK(fr.count == 3);
    const Face& f = c.face(fr.face);
    const Vec3 n = face_plane(c, fr.face).normal;
    Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(4, 24);
    for (int i = 0; i < 4; ++i) {
      for (int a = 0; a < 3; ++a) {
        raw(i, coord_index(8, f[i], a)) += n(a);
        raw(i, coord_index(8, f[(i + 1) % 4], a)) -= n(a);
      }
    }
    const Eigen::MatrixXd rows = B.middleRows(fr.begin, fr.count);
    CHECK((raw - raw * rows.transpose() * rows).norm() <= 1e-12);
    CHECK((rows * rows.transpose() - Eigen::MatrixXd::Identity(3, 3)).norm() <= 1e-12);
  }
  CHECK(par.face_of_row(0) == par.provenance[0].face);

  Eigen::Matrix3Xd bent = c.vertices();
  bent(2, 6) += 0.2;
  try {
    assemble(c.with_vertices(bent), CaseAssignment::uniform(c, CaseKind::Affine));
    FAIL("expected nonplanar error");
  } catch (const Error& e) {
    CHECK(e.code() == "nonplanar_face");
    CHECK(e.ids() == std::vector<int>{1});  // the side faces only slide in-plane
  }
}

TEST_CASE("known dimensions") {
  const Mesh c = cube();
  CHECK(build_subspace(c, CaseAssignment::uniform(c, CaseKind::Affine)).ndof == 12);
  CHECK(build_subspace(c, CaseAssignment::uniform(c, CaseKind::Parallel)).ndof == 6);
  // affine images of a planar quad: the linear part only acts on the face
  // plane, so 6 + 3 parameters
  const Mesh q = quad_grid(2, 2);
  const SubspaceBasis single = build_subspace(q, CaseAssignment::uniform(q, CaseKind::Affine));
  CHECK(single.ndof == 9);
  CHECK(single.ndof == oracle::nullity(oracle::dense(single.constraints->B)));
}

TEST_CASE("sparse nullspace matches the dense oracle on the corpus") {
  std::mt19937 rng(2);
  for (const auto& [name, mesh] : standard_corpus()) {
    if (mesh.num_vertices() > 200) continue;
    for (CaseKind kind : kKinds) {
      INFO(name << " " << to_string(kind));
      const SubspaceBasis basis = build_subspace(mesh, CaseAssignment::uniform(mesh, kind));
      const Eigen::MatrixXd B = oracle::dense(basis.constraints->B);
      CHECK(basis.ndof == oracle::nullity(B));
      CHECK((basis.Q.transpose() * basis.Q - Eigen::MatrixXd::Identity(basis.ndof, basis.ndof)).norm() <= 1e-10);
      CHECK((B * basis.Q).cwiseAbs().maxCoeff() <= basis.absolute_tol());
      // the source lies in its own subspace
      const Eigen::VectorXd x = mesh.vectorized();
      CHECK((B * x).norm() <= 1e-10 * std::max(1.0, basis.sigma_max) * x.norm());
      // bounds
      CHECK(basis.ndof >= min_ndof_bound(counts(mesh), kind));
      // projector agrees with I - B^T (B B^T)^+ B
      const Eigen::VectorXd v = oracle::random_vector(x.size(), rng);
      const Eigen::VectorXd pv = project(basis, v);
      CHECK((pv - oracle::projector(B) * v).norm() <= 1e-9 * v.norm());
      CHECK((project(basis, pv) - pv).norm() <= 1e-12 * v.norm());
      CHECK((B * pv).norm() <= basis.absolute_tol() * v.norm());
    }
  }
}

TEST_CASE("planarity closure") {
  std::mt19937 rng(3);
  for (const auto& [name, mesh] : standard_corpus()) {
    for (CaseKind kind : kKinds) {
      INFO(name << " " << to_string(kind));
      const SubspaceBasis basis = build_subspace(mesh, CaseAssignment::uniform(mesh, kind));
      for (int t = 0; t < 5; ++t) {
        const Eigen::VectorXd w = oracle::random_vector(basis.ndof, rng);
        const Mesh out = mesh.displaced(basis.Q * w);
        CHECK(planarity_report(out).max <= 1e-8);
      }
    }
  }
}

TEST_CASE("affine subspace contains all global affine maps") {
  std::mt19937 rng(4);
  const Mesh m = hex_cap(2);
  const SubspaceBasis basis = build_subspace(m, CaseAssignment::uniform(m, CaseKind::Affine));
  for (int t = 0; t < 20; ++t) {
    const Eigen::Matrix3d A = oracle::random_matrix(3, 3, rng);
    const Vec3 s = oracle::random_vector(3, rng);
    const Mesh moved = m.with_vertices((A * m.vertices()).colwise() + s);
    const Eigen::VectorXd field = moved.vectorized() - m.vectorized();
    CHECK((project(basis, field) - field).norm() <= 1e-9 * field.norm());
  }
}

TEST_CASE("mixed assignment") {
  const Mesh m = hex_cap(2);
  CaseAssignment a = CaseAssignment::uniform(m, CaseKind::Affine);
  a.set(0, FaceCase::parallel());
  a.set(3, FaceCase::vertical());
  a.set(5, FaceCase::prescribed(Vec3(1, 1, 1)));
  CHECK(a.is_mixed(m));
  const SubspaceBasis basis = build_subspace(m, a);
  CHECK_FALSE(basis.decoupled);
  CHECK(basis.ndof == oracle::nullity(oracle::dense(basis.constraints->B)));
  const DofBound bound = ndof_bound(m, a);
  CHECK(bound.heuristic);
}

TEST_CASE("dof formulas") {
  const MeshCounts c = counts(cube());
  CHECK(min_ndof_bound(c, CaseKind::Affine) == 6);
  CHECK(min_ndof_bound(c, CaseKind::Parallel) == 6);
  CHECK(min_ndof_bound(c, CaseKind::Vertical) == 0);

  const MeshCounts g = counts(quad_grid(5, 5));
  CHECK(table1_min_nfv(Family::Quad, CaseKind::Affine, 25, 16, 1, 0) == Rational(9));
  CHECK(min_ndof_bound(g, CaseKind::Affine) == 27);
  CHECK(table1_min_nfv(Family::Quad, CaseKind::Affine, 8, 0, 0, 1) == Rational(2));
  CHECK(table1_min_nfv(Family::Quad, CaseKind::Vertical, 8, 0, 0, 1) == Rational(0));
  CHECK(Rational(6, -4).str() == "-3/2");

  // tabulated entries agree with bound / 3 on pure families
  for (const auto& [name, mesh] : standard_corpus()) {
    const Family fam = mesh_family(mesh);
    if (fam == Family::Other) continue;
    const MeshCounts k = counts(mesh);
    for (CaseKind kind : kKinds) {
      INFO(name << " " << to_string(kind));
      const Rational t = table1_min_nfv(fam, kind, k.num_vertices, k.num_boundary_vertices, k.num_boundary_loops,
                                        k.genus_paper);
      CHECK(t == Rational(min_ndof_bound(k, kind), 3));
    }
  }
}

TEST_CASE("closest PM") {
  const Mesh c = cube();
  const SubspaceBasis basis = build_subspace(c, CaseAssignment::uniform(c, CaseKind::Affine));
  CHECK((closest_pm(basis, c).vertices() - c.vertices()).norm() <= 1e-12);

  Eigen::Matrix3Xd bent = c.vertices();
  bent(2, 6) += 0.3;
  bent(0, 1) -= 0.1;
  const Mesh target = c.with_vertices(bent);
  const Eigen::VectorXd free = closest_pm(basis, target).vectorized();
  CHECK((free - project(basis, target.vectorized())).norm() <= 1e-12);

  const Vec3 pin(1.2, 1.1, 1.4);
  const Mesh out = closest_pm(basis, target, {{6, pin}});
  CHECK((out.vertex(6) - pin).norm() <= 1e-12);
  CHECK(planarity_report(out).max <= 1e-9);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(3, 24);
  for (int a = 0; a < 3; ++a) C(a, coord_index(8, 6, a)) = 1.0;
  const Eigen::VectorXd kkt =
      oracle::constrained_lsq(oracle::dense(basis.constraints->B), target.vectorized(), C, pin);
  CHECK((out.vectorized() - kkt).norm() <= 1e-9);

  // the parallel cube cannot move a vertex off its three planes freely
  const SubspaceBasis par = build_subspace(c, CaseAssignment::uniform(c, CaseKind::Parallel));
  CHECK_THROWS_AS(closest_pm(par, c, {{6, Vec3(1, 1, 1)}, {0, Vec3(-1, -1, -1)}, {1, Vec3(0, 0, 0)}}), Error);
}

TEST_CASE("containment") {
  const Mesh c = cube();
  const auto aff = build_subspace(c, CaseAssignment::uniform(c, CaseKind::Affine));
  const auto par = build_subspace(c, CaseAssignment::uniform(c, CaseKind::Parallel));
  CHECK(containment_check(par, aff).relation == Containment::AInB);
  CHECK(containment_check(aff, par).relation == Containment::BInA);
  CHECK(containment_check(aff, aff).relation == Containment::Equal);

  const Mesh b = open_box();
  const auto aff_b = build_subspace(b, CaseAssignment::uniform(b, CaseKind::Affine));
  const auto par_b = build_subspace(b, CaseAssignment::uniform(b, CaseKind::Parallel));
  const ContainmentResult r = containment_check(par_b, aff_b);
  CHECK(r.relation != Containment::AInB);
  CHECK(r.relation != Containment::Equal);
}

TEST_CASE("basis dump round trip") {
  const Mesh c = cube();
  const auto basis = build_subspace(c, CaseAssignment::uniform(c, CaseKind::Affine));
  std::stringstream s;
  write_basis(basis, s);
  nlohmann::json header;
  const Eigen::MatrixXd Q = read_matrix_dump(s, &header);
  CHECK(header["ndof"] == 12);
  CHECK(header["rows"] == 24);
  CHECK((Q - basis.Q).norm() == 0.0);
}

TEST_CASE("case assignment json") {
  const Mesh c = cube();
  const auto j = nlohmann::json::parse(R"({"default":"affine","faces":{"2":"parallel","3":{"normal":[0,0,2]}}})");
  const CaseAssignment a = parse_assignment(j, c.num_faces());
  CHECK(a[0] == FaceCase::affine());
  CHECK(a[2] == FaceCase::parallel());
  CHECK(a[3] == FaceCase::vertical());
  CHECK(parse_assignment(assignment_to_json(a), 6) == a);
  CHECK_THROWS_AS(parse_assignment(nlohmann::json::parse(R"({"faces":{"9":"affine"}})"), 6), Error);
  const CaseAssignment d = apply_assignment_delta(a, nlohmann::json::parse(R"({"faces":{"0":"vertical"}})"));
  CHECK(d[0] == FaceCase::vertical());
  CHECK(d[2] == FaceCase::parallel());
}

TEST_CASE("reassignment suggestions") {
  const Mesh g = goldberg(1);
  const auto s = reassignment_suggestions(g, CaseAssignment::uniform(g, CaseKind::Affine));
  CHECK(s.size() == static_cast<std::size_t>(g.num_faces()));
  CHECK(reassignment_suggestions(quad_grid(5, 5), CaseAssignment(16, FaceCase::affine())).empty());
}
