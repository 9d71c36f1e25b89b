#include "pmspace/cases.hpp"

#include "pmspace/error.hpp"

#include <cmath>
#include <map>

namespace pmspace {

FaceCase FaceCase::prescribed(const Vec3& n) {
  const double len = n.norm();
  if (!(len > 0.0) || !n.allFinite()) throw Error("invalid_argument", "prescribed normal must be a nonzero vector");
  return {Kind::PrescribedNormal, n / len};
}

bool FaceCase::operator==(const FaceCase& other) const {
  if (kind != other.kind) return false;
  return kind != Kind::PrescribedNormal || (normal - other.normal).norm() <= 1e-12;
}

std::string FaceCase::name() const {
  switch (kind) {
    case Kind::Affine:
      return "affine";
    case Kind::Parallel:
      return "parallel";
    case Kind::PrescribedNormal:
      return (normal - Vec3::UnitZ()).norm() <= 1e-12 ? "vertical" : "prescribed";
  }
  return "unknown";
}

std::string to_string(CaseKind kind) {
  switch (kind) {
    case CaseKind::Affine:
      return "affine";
    case CaseKind::Parallel:
      return "parallel";
    case CaseKind::Vertical:
      return "vertical";
  }
  return "unknown";
}

CaseKind case_kind_from_string(const std::string& name) {
  if (name == "affine") return CaseKind::Affine;
  if (name == "parallel") return CaseKind::Parallel;
  if (name == "vertical") return CaseKind::Vertical;
  throw Error("invalid_argument", "unknown case '" + name + "' (expected affine, parallel or vertical)");
}

FaceCase face_case(CaseKind kind) {
  switch (kind) {
    case CaseKind::Affine:
      return FaceCase::affine();
    case CaseKind::Parallel:
      return FaceCase::parallel();
    case CaseKind::Vertical:
      return FaceCase::vertical();
  }
  return FaceCase::affine();
}

void CaseAssignment::set(int f, const FaceCase& c) {
  if (f < 0 || f >= size()) throw Error("invalid_argument", "face " + std::to_string(f) + " out of range", {f});
  cases_[f] = c;
}

bool CaseAssignment::is_mixed(const Mesh& mesh) const {
  const FaceCase* first = nullptr;
  for (int f = 0; f < mesh.num_faces() && f < size(); ++f) {
    if (mesh.face(f).size() == 3) continue;
    if (!first) {
      first = &cases_[f];
    } else if (!(cases_[f] == *first)) {
      return true;
    }
  }
  return false;
}

FaceCase parse_face_case(const nlohmann::json& j) {
  if (j.is_string()) return face_case(case_kind_from_string(j.get<std::string>()));
  if (j.is_object() && j.contains("normal")) {
    const auto& n = j.at("normal");
    if (!n.is_array() || n.size() != 3) throw Error("invalid_argument", "\"normal\" must be a 3-element array");
    return FaceCase::prescribed(Vec3(n[0].get<double>(), n[1].get<double>(), n[2].get<double>()));
  }
  throw Error("invalid_argument", "face case must be a keyword or {\"normal\":[x,y,z]}");
}

nlohmann::json face_case_to_json(const FaceCase& c) {
  if (c.kind == FaceCase::Kind::PrescribedNormal && c.name() != "vertical") {
    return {{"normal", {c.normal.x(), c.normal.y(), c.normal.z()}}};
  }
  return c.name();
}

CaseAssignment apply_assignment_delta(const CaseAssignment& base, const nlohmann::json& delta) {
  if (!delta.is_object()) throw Error("invalid_argument", "case assignment must be a JSON object");
  CaseAssignment out = base;
  if (delta.contains("default")) out = CaseAssignment(base.size(), parse_face_case(delta.at("default")));
  if (delta.contains("faces")) {
    const auto& faces = delta.at("faces");
    if (!faces.is_object()) throw Error("invalid_argument", "\"faces\" must be an object keyed by face id");
    for (const auto& [key, value] : faces.items()) {
      int f = -1;
      try {
        std::size_t used = 0;
        f = std::stoi(key, &used);
        if (used != key.size()) f = -1;
      } catch (const std::exception&) {
        f = -1;
      }
      if (f < 0 || f >= out.size()) throw Error("invalid_argument", "bad face id '" + key + "'");
      out.set(f, parse_face_case(value));
    }
  }
  return out;
}

CaseAssignment parse_assignment(const nlohmann::json& j, int num_faces) {
  return apply_assignment_delta(CaseAssignment(num_faces, FaceCase::affine()), j);
}

nlohmann::json assignment_to_json(const CaseAssignment& assignment) {
  // most frequent tag becomes the default
  std::map<std::string, int> tally;
  for (const auto& c : assignment.cases()) tally[face_case_to_json(c).dump()]++;
  std::string best = "\"affine\"";
  int best_count = -1;
  for (const auto& [k, v] : tally) {
    if (v > best_count) {
      best = k;
      best_count = v;
    }
  }
  const nlohmann::json def = nlohmann::json::parse(best);
  nlohmann::json faces = nlohmann::json::object();
  for (int f = 0; f < assignment.size(); ++f) {
    const auto cj = face_case_to_json(assignment[f]);
    if (cj != def) faces[std::to_string(f)] = cj;
  }
  return {{"default", def}, {"faces", faces}};
}

}  // namespace pmspace
