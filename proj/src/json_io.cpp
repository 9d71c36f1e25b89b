#include "pmspace/json_io.hpp"

namespace pmspace {

nlohmann::json mesh_to_json(const Mesh& mesh) {
  nlohmann::json vertices = nlohmann::json::array();
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const Vec3 p = mesh.vertex(v);
    vertices.push_back({p.x(), p.y(), p.z()});
  }
  return {{"vertices", vertices}, {"faces", mesh.faces()}};
}

Mesh mesh_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("vertices") || !j.contains("faces")) {
    throw Error("parse_error", "mesh payload needs \"vertices\" and \"faces\"");
  }
  const auto& jv = j.at("vertices");
  const auto& jf = j.at("faces");
  if (!jv.is_array() || !jf.is_array()) throw Error("parse_error", "vertices and faces must be arrays");
  Eigen::Matrix3Xd X(3, jv.size());
  std::vector<Face> faces;
  try {
    for (std::size_t i = 0; i < jv.size(); ++i) {
      if (!jv[i].is_array() || jv[i].size() != 3) {
        throw Error("parse_error", "vertex " + std::to_string(i) + " is not [x,y,z]", {static_cast<int>(i)});
      }
      for (int a = 0; a < 3; ++a) X(a, i) = jv[i][a].get<double>();
    }
    for (const auto& f : jf) faces.push_back(f.get<Face>());
  } catch (const nlohmann::json::exception& e) {
    throw Error("parse_error", std::string("bad mesh payload: ") + e.what());
  }
  return Mesh(std::move(X), std::move(faces));
}

nlohmann::json counts_to_json(const MeshCounts& c) {
  return {{"vertices", c.num_vertices},
          {"edges", c.num_edges},
          {"faces", c.num_faces},
          {"corners", c.num_corners},
          {"boundary_vertices", c.num_boundary_vertices},
          {"boundary_loops", c.num_boundary_loops},
          {"genus", c.genus_paper}};
}

nlohmann::json error_to_json(const Error& e) {
  return {{"code", e.code()}, {"ids", e.ids()}, {"message", e.what()}};
}

std::map<std::string, ContainmentResult> containment_flags(const Mesh& mesh, const SubspaceBasis& active) {
  std::map<std::string, ContainmentResult> out;
  for (CaseKind kind : {CaseKind::Affine, CaseKind::Parallel, CaseKind::Vertical}) {
    out[to_string(kind)] = containment_check(active, build_subspace(mesh, CaseAssignment::uniform(mesh, kind)));
  }
  return out;
}

nlohmann::json analysis_json(const Mesh& mesh, const CaseAssignment& assignment, const SubspaceBasis& basis,
                             const std::map<std::string, ContainmentResult>* containment) {
  const MeshCounts c = counts(mesh);
  const DofBound bound = ndof_bound(mesh, assignment);
  const Family family = mesh_family(mesh);
  const auto kind = uniform_kind(mesh, assignment);

  nlohmann::json j;
  j["counts"] = counts_to_json(c);
  j["ndof"] = basis.ndof;
  j["free_vertices"] = Rational(basis.ndof, 3).str();
  j["decoupled"] = basis.decoupled;
  j["bound"] = {{"min_ndof", bound.value}, {"heuristic", bound.heuristic}};
  j["family"] = to_string(family);
  j["case"] = kind ? to_string(*kind) : (assignment.is_mixed(mesh) ? "mixed" : "unconstrained");
  if (kind && family != Family::Other) {
    const Rational nfv = table1_min_nfv(family, *kind, c.num_vertices, c.num_boundary_vertices,
                                        c.num_boundary_loops, c.genus_paper);
    j["bound"]["table_min_nfv"] = nfv.str();
    j["bound"]["table_ok"] = nfv <= Rational(basis.ndof, 3);
  }
  j["bound"]["ok"] = bound.value <= basis.ndof;
  j["planarity_max"] = planarity_report(mesh).max;

  nlohmann::json sugg = nlohmann::json::array();
  for (const auto& s : reassignment_suggestions(mesh, assignment)) {
    sugg.push_back({{"face", s.face}, {"reason", s.reason}, {"suggested", face_case_to_json(s.suggested)}});
  }
  j["suggestions"] = sugg;
  if (containment) {
    nlohmann::json flags;
    for (const auto& [name, r] : *containment) {
      flags[name] = {{"relation", to_string(r.relation)}, {"dim_intersection", r.dim_intersection},
                     {"dim_other", r.dim_b}};
    }
    j["containment"] = flags;
  }
  return j;
}

}  // namespace pmspace
