#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "pmspace/corpus.hpp"
#include "pmspace/deform.hpp"
#include "pmspace/error.hpp"

#include <Eigen/Eigenvalues>

#include <random>

using namespace pmspace;

namespace {

Eigen::Matrix3Xd centered(const Eigen::Matrix3Xd& X) { return X.colwise() - X.rowwise().mean(); }

// Horn's closed form: the rotation maximizing sum q_i . R p_i is the
// quaternion of the top eigenvector of a symmetric 4 x 4 matrix.
Eigen::Matrix3d horn_rotation(const Eigen::Matrix3Xd& from, const Eigen::Matrix3Xd& to) {
  const Eigen::Matrix3d M = centered(from) * centered(to).transpose();
  const double Sxx = M(0, 0), Sxy = M(0, 1), Sxz = M(0, 2), Syx = M(1, 0), Syy = M(1, 1), Syz = M(1, 2),
               Szx = M(2, 0), Szy = M(2, 1), Szz = M(2, 2);
  Eigen::Matrix4d N;
  N << Sxx + Syy + Szz, Syz - Szy, Szx - Sxz, Sxy - Syx,
       Syz - Szy, Sxx - Syy - Szz, Sxy + Syx, Szx + Sxz,
       Szx - Sxz, Sxy + Syx, -Sxx + Syy - Szz, Syz + Szy,
       Sxy - Syx, Szx + Sxz, Syz + Szy, -Sxx - Syy + Szz;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(N);
  const Eigen::Vector4d q = eig.eigenvectors().col(3);
  return Eigen::Quaterniond(q(0), q(1), q(2), q(3)).normalized().toRotationMatrix();
}

Eigen::Matrix3d random_rotation(std::mt19937& rng) {
  std::normal_distribution<double> g;
  return Eigen::Quaterniond(g(rng), g(rng), g(rng), g(rng)).normalized().toRotationMatrix();
}

Mesh jiggle_in_subspace(const Mesh& m, const SubspaceBasis& basis, double amount, std::mt19937& rng) {
  return m.displaced(amount * m.bbox_diagonal() * (basis.Q * oracle::random_vector(basis.ndof, rng)).normalized());
}

// Dense version of the global step: minimize the face term plus soft handle
// terms subject to B x = 0 and the hard handles, through the KKT system.
Eigen::VectorXd global_step_oracle(const Mesh& rest, const SubspaceBasis& basis, const std::vector<Handle>& handles,
                                   const std::vector<Eigen::Matrix3d>& T, double soft_weight) {
  const int n = rest.num_vertices();
  int corners = 0;
  for (const Face& f : rest.faces()) corners += static_cast<int>(f.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3 * corners, 3 * n);
  Eigen::VectorXd t(3 * corners);
  int row = 0;
  for (int f = 0; f < rest.num_faces(); ++f) {
    const Face& face = rest.face(f);
    const int k = static_cast<int>(face.size());
    const Eigen::Matrix3Xd target = T[f] * centered(rest.face_vertices(f));
    for (int i = 0; i < k; ++i) {
      for (int a = 0; a < 3; ++a, ++row) {
        for (int j = 0; j < k; ++j) A(row, a * n + face[j]) -= 1.0 / k;
        A(row, a * n + face[i]) += 1.0;
        t(row) = target(a, i);
      }
    }
  }
  Eigen::MatrixXd H = A.transpose() * A;
  Eigen::VectorXd g = A.transpose() * t;
  std::vector<const Handle*> hard;
  for (const Handle& h : handles) {
    if (h.hard) {
      hard.push_back(&h);
      continue;
    }
    const double w = h.weight > 0 ? h.weight : soft_weight;
    for (int a = 0; a < 3; ++a) {
      H(a * n + h.vertex, a * n + h.vertex) += w;
      g(a * n + h.vertex) += w * h.target(a);
    }
  }
  const Eigen::MatrixXd B = oracle::dense(basis.constraints->B);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(B.rows() + 3 * hard.size(), 3 * n);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(C.rows());
  C.topRows(B.rows()) = B;
  for (std::size_t i = 0; i < hard.size(); ++i) {
    for (int a = 0; a < 3; ++a) {
      C(B.rows() + 3 * i + a, a * n + hard[i]->vertex) = 1.0;
      d(B.rows() + 3 * i + a) = hard[i]->target(a);
    }
  }
  const Eigen::Index N = 3 * n, m = C.rows();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(N + m, N + m);
  K.topLeftCorner(N, N) = H;
  K.topRightCorner(N, m) = C.transpose();
  K.bottomLeftCorner(m, N) = C;
  Eigen::VectorXd rhs(N + m);
  rhs << g, d;
  return K.completeOrthogonalDecomposition().solve(rhs).head(N);
}

}  // namespace

TEST_CASE("local step matches the quaternion rotation oracle") {
  std::mt19937 rng(2);
  const Mesh rest = corpus_mesh("hex_patch1");
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::Matrix3Xd X = rest.vertices();
    std::normal_distribution<double> g;
    for (Eigen::Index i = 0; i < X.size(); ++i) X(i) += 0.05 * g(rng);
    const Mesh current = rest.with_vertices(random_rotation(rng) * 1.7 * X);
    const auto R = local_step(rest, current, Energy::ARAP);
    const auto S = local_step(rest, current, Energy::ASAP);
    for (int f = 0; f < rest.num_faces(); ++f) {
      const Eigen::Matrix3Xd Y = rest.face_vertices(f), P = current.face_vertices(f);
      const Eigen::Matrix3d Rh = horn_rotation(Y, P);
      CHECK((R[f] - Rh).norm() < 1e-9);
      CHECK(R[f].determinant() == doctest::Approx(1.0));
      const double s = (Rh.transpose() * centered(P) * centered(Y).transpose()).trace() / centered(Y).squaredNorm();
      CHECK((S[f] - s * Rh).norm() < 1e-9);
    }
  }
}

TEST_CASE("local step flags degenerate faces") {
  const Mesh rest = cube();
  Eigen::Matrix3Xd X = rest.vertices();
  for (int v : rest.face(0)) X.col(v) = Vec3(0.2, 0.1, 0.3);
  std::vector<int> degenerate;
  const auto T = local_step(rest, rest.with_vertices(X), Energy::ARAP, &degenerate);
  REQUIRE(degenerate.size() == 1);
  CHECK(degenerate[0] == 0);
  CHECK(T[0].isIdentity());
}

TEST_CASE("global step matches the dense KKT oracle") {
  std::mt19937 rng(4);
  for (const char* name : {"grid_lifted", "torus", "hex_patch1"}) {
    const Mesh rest = corpus_mesh(name);
    for (CaseKind kind : {CaseKind::Affine, CaseKind::Parallel, CaseKind::Vertical}) {
      CAPTURE(name);
      CAPTURE(to_string(kind));
      const SubspaceBasis basis = build_subspace(rest, CaseAssignment::uniform(rest, kind));
      const Mesh moved = jiggle_in_subspace(rest, basis, 0.1, rng);
      std::vector<Handle> handles;
      handles.push_back({0, moved.vertex(0), true, 0.0});
      handles.push_back({rest.num_vertices() - 1, moved.vertex(rest.num_vertices() - 1), false, 50.0});
      handles.push_back({rest.num_vertices() / 2, moved.vertex(rest.num_vertices() / 2) + Vec3(0, 0, 0.1), false, 0.0});
      DeformParams params;
      params.soft_weight = 10.0;
      const DeformSolver solver(basis, rest, handles, params);
      std::vector<Eigen::Matrix3d> T;
      for (int f = 0; f < rest.num_faces(); ++f) T.push_back(random_rotation(rng));
      const Mesh got = solver.global_step(T);
      const Eigen::VectorXd expect = global_step_oracle(rest, basis, handles, T, params.soft_weight);
      CHECK((got.vectorized() - expect).norm() < 1e-8 * expect.norm());
      CHECK((got.vertex(0) - moved.vertex(0)).norm() < 1e-10);
    }
  }
}

TEST_CASE("alternation decreases energy and stays in the subspace") {
  std::mt19937 rng(8);
  for (Energy energy : {Energy::ARAP, Energy::ASAP}) {
    for (const char* name : {"grid_lifted", "torus", "hex_patch2", "cube"}) {
      const Mesh rest = corpus_mesh(name);
      for (CaseKind kind : {CaseKind::Affine, CaseKind::Parallel, CaseKind::Vertical}) {
        CAPTURE(name);
        CAPTURE(to_string(kind));
        CAPTURE(to_string(energy));
        const SubspaceBasis basis = build_subspace(rest, CaseAssignment::uniform(rest, kind));
        const Mesh goal = jiggle_in_subspace(rest, basis, 0.2, rng);
        std::vector<Handle> handles = {{0, goal.vertex(0), false, 0.0},
                                       {rest.num_vertices() - 1, goal.vertex(rest.num_vertices() - 1) + Vec3(0, 0, 0.2),
                                        false, 0.0}};
        DeformParams params;
        params.energy = energy;
        params.iterations = 30;
        const DeformResult r = deform(basis, rest, handles, params);
        REQUIRE(!r.energy.empty());
        for (std::size_t i = 1; i < r.energy.size(); ++i) CHECK(r.energy[i] <= r.energy[i - 1] + 1e-9);
        const Eigen::VectorXd x = r.mesh.vectorized();
        CHECK(basis.constraints->residual(x) <= 1e-9 * x.norm());
        CHECK(planarity_report(r.mesh).max <= 1e-8);
      }
    }
  }
}

TEST_CASE("affine hex patch drag is a global affine image") {
  // curved patch: on a flat honeycomb the affine case also admits
  // piecewise-affine liftings, so the property needs a non-planar source
  const Mesh rest = corpus_mesh("hex_cap2");
  const SubspaceBasis basis = build_subspace(rest, CaseAssignment::uniform(rest, CaseKind::Affine));
  REQUIRE(basis.ndof == 12);
  std::vector<Handle> handles = {{0, rest.vertex(0), true, 0.0},
                                 {5, rest.vertex(5) + Vec3(0.5, 0.2, 0.8), false, 0.0},
                                 {20, rest.vertex(20) + Vec3(-0.3, 0.0, 0.4), false, 0.0}};
  const DeformResult r = deform(basis, rest, handles);
  // least-squares affine fit [M t] of the result onto the rest positions
  const int n = rest.num_vertices();
  Eigen::MatrixXd Y(n, 4);
  Y.leftCols(3) = rest.vertices().transpose();
  Y.col(3).setOnes();
  const Eigen::MatrixXd X = r.mesh.vertices().transpose();
  const Eigen::MatrixXd M = Y.colPivHouseholderQr().solve(X);
  CHECK((Y * M - X).cwiseAbs().maxCoeff() <= 1e-6 * rest.bbox_diagonal());
  CHECK((r.mesh.vertex(0) - rest.vertex(0)).norm() < 1e-10);
  CHECK((r.mesh.vertices() - rest.vertices()).norm() > 1e-3);
}

TEST_CASE("deformation commutes with a rigid rotation of the input") {
  const Eigen::Matrix3d R = Eigen::AngleAxisd(0.7, Vec3(1.0, 2.0, -0.5).normalized()).toRotationMatrix();
  const Mesh rest = corpus_mesh("grid_lifted");
  const int n = rest.num_vertices();
  auto rotate = [&](const Eigen::Matrix3Xd& V) {
    const Eigen::Matrix3Xd RV = R * V;
    Eigen::VectorXd v(3 * n);
    for (int a = 0; a < 3; ++a) v.segment(a * n, n) = RV.row(a).transpose();
    return rest.with_vectorized(v);
  };
  const Mesh rest_r = rotate(rest.vertices());
  for (CaseKind kind : {CaseKind::Affine, CaseKind::Parallel, CaseKind::Vertical}) {
    CAPTURE(to_string(kind));
    CaseAssignment cases = CaseAssignment::uniform(rest, kind);
    CaseAssignment cases_r = cases;
    // the vertical direction rotates with the mesh
    if (kind == CaseKind::Vertical) cases_r = CaseAssignment(rest.num_faces(), FaceCase::prescribed(R * Vec3::UnitZ()));
    const SubspaceBasis basis = build_subspace(rest, cases);
    const SubspaceBasis basis_r = build_subspace(rest_r, cases_r);
    REQUIRE(basis.ndof == basis_r.ndof);
    const Vec3 d(0.1, -0.2, 0.3);
    std::vector<Handle> handles = {{0, rest.vertex(0), true, 0.0}, {n - 1, rest.vertex(n - 1) + d, false, 0.0}};
    std::vector<Handle> handles_r = {{0, R * rest.vertex(0), true, 0.0},
                                     {n - 1, R * (rest.vertex(n - 1) + d), false, 0.0}};
    DeformParams params;
    params.iterations = 20;
    params.convergence_tol = 0.0;
    const DeformResult a = deform(basis, rest, handles, params);
    const DeformResult b = deform(basis_r, rest_r, handles_r, params);
    CHECK((R * a.mesh.vertices() - b.mesh.vertices()).cwiseAbs().maxCoeff() <= 1e-8 * rest.bbox_diagonal());
  }
}

TEST_CASE("hard handles are met exactly or rejected") {
  const Mesh rest = corpus_mesh("hex_patch1");
  const SubspaceBasis basis = build_subspace(rest, CaseAssignment::uniform(rest, CaseKind::Affine));
  SUBCASE("translation is reachable") {
    const Vec3 shift(0.3, -0.1, 0.7);
    std::vector<Handle> handles;
    for (int v : {0, 3, 9, 14}) handles.push_back({v, rest.vertex(v) + shift, true, 0.0});
    const DeformResult r = deform(basis, rest, handles);
    CHECK((r.mesh.vertices() - (rest.vertices().colwise() + shift)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(r.converged);
  }
  SUBCASE("five coplanar vertices cannot leave their plane independently") {
    std::vector<Handle> handles;
    for (int v : {0, 1, 2, 3}) handles.push_back({v, rest.vertex(v), true, 0.0});
    handles.push_back({4, rest.vertex(4) + Vec3(0, 0, 1), true, 0.0});
    try {
      DeformSolver(basis, rest, handles);
      FAIL("expected infeasible_constraints");
    } catch (const Error& e) {
      CHECK(e.code() == "infeasible_constraints");
      CHECK(e.ids().size() == 5);
    }
  }
  SUBCASE("bad handles") {
    CHECK_THROWS_AS(DeformSolver(basis, rest, {{-1, Vec3::Zero(), true, 0.0}}), Error);
    CHECK_THROWS_AS(DeformSolver(basis, rest, {{1, Vec3::Zero(), true, 0.0}, {1, Vec3::Zero(), false, 0.0}}), Error);
  }
}

TEST_CASE("no handles returns the rest mesh") {
  const Mesh rest = cube();
  const SubspaceBasis basis = build_subspace(rest, CaseAssignment::uniform(rest, CaseKind::Affine));
  const DeformResult r = deform(basis, rest, {});
  CHECK(r.mesh.vertices() == rest.vertices());
  CHECK(r.converged);
}

TEST_CASE("handles json round trip") {
  const auto j = nlohmann::json::parse(
      R"([{"vertex":5,"target":[1,2,3],"mode":"hard"},{"vertex":7,"target":[0,0,1],"mode":"soft","weight":3}])");
  const auto h = parse_handles(j);
  REQUIRE(h.size() == 2);
  CHECK(h[0].hard);
  CHECK(h[1].weight == 3.0);
  CHECK(parse_handles(handles_to_json(h)).size() == 2);
  CHECK_THROWS_AS(parse_handles(nlohmann::json::parse(R"([{"vertex":1,"target":[1,2]}])")), Error);
  CHECK(energy_from_string("asap") == Energy::ASAP);
  CHECK_THROWS_AS(energy_from_string("rigid"), Error);
}
