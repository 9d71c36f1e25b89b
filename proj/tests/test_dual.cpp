#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "pmspace/corpus.hpp"
#include "pmspace/dual.hpp"
#include "pmspace/error.hpp"
#include "pmspace/topology.hpp"

#include <algorithm>
#include <random>
#include <set>

using namespace pmspace;

TEST_CASE("cube and octahedron are polar to each other") {
  const Mesh c = cube();
  const DualMesh d = polar_dual(c);
  CHECK_FALSE(d.center_moved);
  REQUIRE(d.mesh.num_vertices() == 6);
  REQUIRE(d.mesh.num_faces() == 8);
  for (const Face& f : d.mesh.faces()) CHECK(f.size() == 3);
  // the six vertices are the unit axis points
  std::set<std::tuple<long, long, long>> got;
  for (int i = 0; i < 6; ++i) {
    const Vec3 u = d.mesh.vertex(i);
    CHECK(std::abs(u.norm() - 1.0) < 1e-10);
    CHECK((u.cwiseAbs().maxCoeff() - 1.0) < 1e-10);
    got.insert({std::lround(u.x()), std::lround(u.y()), std::lround(u.z())});
  }
  CHECK(got.size() == 6);
  // the octahedron's dual is the cube again
  const DualMesh back = dual_of_dual(d);
  CHECK((back.mesh.vertices() - c.vertices()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(is_closed(d.mesh));
}

TEST_CASE("dual faces follow vertex fans and have outward orientation") {
  const Mesh c = cube();
  const DualMesh d = polar_dual(c);
  for (int v = 0; v < c.num_vertices(); ++v) {
    const FacePlane p = face_plane(d.mesh, v);
    CHECK(p.normal.dot(c.vertex(v)) > 0.0);
  }
}

TEST_CASE("dual round trip restores the primal") {
  for (const char* name : {"cube", "torus", "dodecahedron", "goldberg1", "irregular3", "hex_prism"}) {
    CAPTURE(name);
    const Mesh m = corpus_mesh(name);
    const DualMesh d = polar_dual(m);
    const Reconstruction r = primal_from_dual(d, m);
    CHECK(r.max_residual <= 1e-9);
    CHECK((r.mesh.vertices() - m.vertices()).cwiseAbs().maxCoeff() <= 1e-9 * m.bbox_diagonal());
  }
}

TEST_CASE("polarity scale and explicit center") {
  const Mesh m = corpus_mesh("dodecahedron");
  DualOptions opt;
  opt.scale = 2.5;
  opt.center = Vec3(0.05, -0.02, 0.01);
  const DualMesh d = polar_dual(m, opt);
  for (int f = 0; f < m.num_faces(); ++f) {
    const FacePlane p = face_plane(m, f);
    const double delta = p.normal.dot(p.centroid - *opt.center);
    CHECK((d.mesh.vertex(f) - *opt.center).dot(p.normal) * delta == doctest::Approx(6.25));
  }
  const Reconstruction r = primal_from_dual(d, m);
  CHECK((r.mesh.vertices() - m.vertices()).norm() < 1e-9);
}

TEST_CASE("planes through the center") {
  const Mesh m = cube();
  DualOptions opt;
  opt.center = Vec3(1.0, 0.0, 0.0);
  try {
    polar_dual(m, opt);
    FAIL("expected plane_through_center");
  } catch (const Error& e) {
    CHECK(e.code() == "plane_through_center");
    CHECK(e.ids().size() == 1);
  }
  CHECK_THROWS_AS(polar_dual(open_box()), Error);
}

TEST_CASE("automatic center slides off a face plane") {
  // extruded L shape: its vertex centroid lies on the planes x = 1 and y = 1
  const double L[6][2] = {{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}};
  Eigen::Matrix3Xd X(3, 12);
  for (int i = 0; i < 6; ++i) {
    X.col(i) = Vec3(L[i][0], L[i][1], 0.0);
    X.col(6 + i) = Vec3(L[i][0], L[i][1], 1.0);
  }
  std::vector<Face> faces = {{5, 4, 3, 2, 1, 0}, {6, 7, 8, 9, 10, 11}};
  for (int i = 0; i < 6; ++i) faces.push_back({i, (i + 1) % 6, 6 + (i + 1) % 6, 6 + i});
  const Mesh m(X, faces);
  REQUIRE(is_closed(m));
  const DualMesh d = polar_dual(m);
  CHECK(d.center_moved);
  for (int f = 0; f < m.num_faces(); ++f) {
    const FacePlane p = face_plane(m, f);
    CHECK(std::abs(p.normal.dot(p.centroid - d.center)) > 1e-6 * m.bbox_diagonal());
  }
  const Reconstruction r = primal_from_dual(d, m);
  CHECK((r.mesh.vertices() - m.vertices()).cwiseAbs().maxCoeff() < 1e-9);
  // an explicit center is never moved
  DualOptions opt;
  opt.center = Vec3(1.0, 1.0, 0.5);
  CHECK_THROWS_AS(polar_dual(m, opt), Error);
}

TEST_CASE("dual edits on 3-regular meshes reconstruct") {
  std::mt19937 rng(11);
  for (const auto& [name, m] : closed_3regular_corpus()) {
    CAPTURE(name);
    const DualMesh d = polar_dual(m);
    const CaseAssignment cases = CaseAssignment::uniform(d.mesh, CaseKind::Affine);
    SUBCASE("eigenshape") {
      DualEditRequest req;
      req.amplitude = 0.02;
      const DualEditResult r = dual_edit(m, cases, req);
      CHECK(r.max_residual <= 1e-8);
      CHECK(planarity_report(r.primal).max <= 1e-8);
      CHECK((r.primal.vertices() - m.vertices()).norm() > 1e-6);
    }
    SUBCASE("random field") {
      DualEditRequest req;
      req.mode = DualEditRequest::Mode::Field;
      req.field = 0.01 * d.mesh.bbox_diagonal() * oracle::random_vector(3 * d.mesh.num_vertices(), rng).normalized();
      const DualEditResult r = dual_edit(m, cases, req);
      CHECK(r.max_residual <= 1e-8);
      CHECK(r.dual_residual <= 1e-10);
      CHECK(planarity_report(r.primal).max <= 1e-8);
    }
  }
}

TEST_CASE("non-planar dual faces are reported") {
  // torus vertices have degree 4, so moving one dual vertex bends four dual faces
  const Mesh m = corpus_mesh("torus");
  DualMesh d = polar_dual(m);
  Eigen::Matrix3Xd U = d.mesh.vertices();
  U.col(0) += Vec3(0.05, 0.03, 0.05);
  d.mesh = d.mesh.with_vertices(U);
  try {
    primal_from_dual(d, m);
    FAIL("expected inconsistent_dual");
  } catch (const Error& e) {
    CHECK(e.code() == "inconsistent_dual");
    REQUIRE_FALSE(e.ids().empty());
    const Face& f0 = m.face(0);
    for (int v : e.ids()) CHECK(std::find(f0.begin(), f0.end(), v) != f0.end());
  }
}

TEST_CASE("sidecar") {
  const DualMesh d = polar_dual(cube());
  const auto j = dual_sidecar(d);
  CHECK(j["dual_vertex_to_primal_face"].size() == 6);
  CHECK(j["dual_face_to_primal_vertex"].size() == 8);
  CHECK(j["scale"] == 1.0);
}
