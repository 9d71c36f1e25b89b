#pragma once

#include "pmspace/mesh.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace pmspace {

/// Relationship case that generates a face's subspace.
struct FaceCase {
  enum class Kind { Affine, Parallel, PrescribedNormal };

  Kind kind = Kind::Affine;
  Vec3 normal = Vec3::UnitZ();  // used by PrescribedNormal only

  static FaceCase affine() { return {Kind::Affine, Vec3::UnitZ()}; }
  static FaceCase parallel() { return {Kind::Parallel, Vec3::UnitZ()}; }
  static FaceCase prescribed(const Vec3& n);
  static FaceCase vertical() { return prescribed(Vec3::UnitZ()); }

  bool operator==(const FaceCase& other) const;
  std::string name() const;
};

/// Non-mixed case families used by the DOF formulas and audits.
enum class CaseKind { Affine, Parallel, Vertical };

std::string to_string(CaseKind kind);
CaseKind case_kind_from_string(const std::string& name);
FaceCase face_case(CaseKind kind);

/// Per-face case tags. Triangles may carry any tag; they receive no
/// constraints.
class CaseAssignment {
 public:
  CaseAssignment() = default;
  CaseAssignment(int num_faces, FaceCase fill) : cases_(num_faces, fill) {}

  static CaseAssignment uniform(const Mesh& mesh, CaseKind kind) {
    return CaseAssignment(mesh.num_faces(), face_case(kind));
  }

  int size() const { return static_cast<int>(cases_.size()); }
  const FaceCase& operator[](int f) const { return cases_[f]; }
  void set(int f, const FaceCase& c);
  const std::vector<FaceCase>& cases() const { return cases_; }

  /// True when the constrained (non-triangle) faces do not share one kind.
  bool is_mixed(const Mesh& mesh) const;

  bool operator==(const CaseAssignment& other) const { return cases_ == other.cases_; }

 private:
  std::vector<FaceCase> cases_;
};

/// Parses {"default":"affine","faces":{"12":"parallel","13":{"normal":[0,0,1]}}}.
/// Face entries accept "affine", "parallel", "vertical" or {"normal":[x,y,z]}.
CaseAssignment parse_assignment(const nlohmann::json& j, int num_faces);
/// Applies a delta on top of `base`: a "default" key resets every face first.
CaseAssignment apply_assignment_delta(const CaseAssignment& base, const nlohmann::json& delta);
nlohmann::json assignment_to_json(const CaseAssignment& assignment);

FaceCase parse_face_case(const nlohmann::json& j);
nlohmann::json face_case_to_json(const FaceCase& c);

}  // namespace pmspace
