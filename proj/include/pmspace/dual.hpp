#pragma once

#include "pmspace/basis.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pmspace {

/// Polar dual: dual vertex f is center + scale^2 * n_f / delta_f, where delta_f
/// is the signed offset of primal face plane f from the center; dual face v
/// runs through the faces around primal vertex v in fan order.
struct DualMesh {
  Mesh mesh;
  Vec3 center = Vec3::Zero();
  double scale = 1.0;
  bool center_moved = false;  // the automatic center fallback kicked in
};

struct DualOptions {
  std::optional<Vec3> center;  // default: vertex centroid, with fallback
  double scale = 1.0;
  double offset_tol = 1e-6;    // min |delta_f| relative to the bbox diagonal
};

DualMesh polar_dual(const Mesh& mesh, const DualOptions& options = {});

struct Reconstruction {
  Mesh mesh;
  std::vector<double> residuals;  // per primal vertex, relative
  double max_residual = 0.0;
};

/// Solves (u_f - c) . (x_v - c) = scale^2 over the faces around every primal
/// vertex (exact for degree 3, least squares otherwise). Vertices whose
/// normalized residual exceeds `residual_tol` make the call throw
/// Error("inconsistent_dual") listing them.
Reconstruction primal_from_dual(const DualMesh& dual, const Mesh& primal_topology, double residual_tol = 1e-8);

/// Dual of a dual, with the induced topology: its vertices are the primal
/// vertices again.
DualMesh dual_of_dual(const DualMesh& dual);

struct DualEditRequest {
  enum class Mode { Eigenshape, Bandpass, Field };
  Mode mode = Mode::Eigenshape;
  int index = -1;            // eigenshape index; -1 = lowest nonzero frequency
  double amplitude = 0.1;    // relative to the dual's bbox diagonal
  double low = 0.0, high = 0.0, gain = 0.0;  // bandpass
  Eigen::VectorXd field;     // Field mode: raw dual displacement (projected)
};

struct DualEditResult {
  Mesh primal;
  DualMesh dual;              // edited dual
  double dual_residual = 0.0; // ||B_dual d|| / ||d|| of the applied displacement
  std::vector<double> vertex_residuals;
  double max_residual = 0.0;
};

/// polar_dual -> subspace and shapes on the dual -> primal_from_dual.
DualEditResult dual_edit(const Mesh& mesh, const CaseAssignment& dual_cases, const DualEditRequest& edit,
                         const DualOptions& options = {});

/// JSON sidecar {center, scale, dual_vertex_to_primal_face, dual_face_to_primal_vertex}.
nlohmann::json dual_sidecar(const DualMesh& dual);

}  // namespace pmspace
