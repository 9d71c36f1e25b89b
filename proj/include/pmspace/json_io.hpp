#pragma once

#include "pmspace/basis.hpp"
#include "pmspace/dof.hpp"
#include "pmspace/error.hpp"

#include <json.hpp>

#include <map>
#include <string>

namespace pmspace {

/// {"vertices":[[x,y,z],...], "faces":[[i,j,k,...],...]} with 0-based indices.
nlohmann::json mesh_to_json(const Mesh& mesh);
Mesh mesh_from_json(const nlohmann::json& j);

nlohmann::json counts_to_json(const MeshCounts& c);

/// {"code","ids","message"}.
nlohmann::json error_to_json(const Error& e);

/// Containment of the active subspace against every non-mixed case of the
/// same mesh, keyed by case name.
std::map<std::string, ContainmentResult> containment_flags(const Mesh& mesh, const SubspaceBasis& active);

/// Counts, ndof, bounds, family, table entry, suggestions and (when given)
/// containment flags for one assignment.
nlohmann::json analysis_json(const Mesh& mesh, const CaseAssignment& assignment, const SubspaceBasis& basis,
                             const std::map<std::string, ContainmentResult>* containment = nullptr);

}  // namespace pmspace
