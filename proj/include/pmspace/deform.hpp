#pragma once

#include "pmspace/basis.hpp"

#include <string>
#include <vector>

namespace pmspace {

enum class Energy { ARAP, ASAP };
std::string to_string(Energy e);
Energy energy_from_string(const std::string& name);

struct Handle {
  int vertex = -1;
  Vec3 target = Vec3::Zero();
  bool hard = false;
  double weight = 0.0;  // soft only; 0 picks DeformParams::soft_weight
};

struct DeformParams {
  Energy energy = Energy::ARAP;
  int iterations = 50;
  double soft_weight = 1e4;
  double convergence_tol = 1e-7;  // max vertex motion per iteration / bbox diagonal
  double min_scale = 1e-3;        // ASAP scale clamp
  double max_scale = 1e3;
};

/// Per-face best rotation (ARAP) or scaled rotation (ASAP) taking the centered
/// rest face to the centered current face. Degenerate current faces get the
/// identity and are listed in `degenerate`.
std::vector<Eigen::Matrix3d> local_step(const Mesh& rest, const Mesh& current, Energy energy,
                                        std::vector<int>* degenerate = nullptr, double min_scale = 1e-3,
                                        double max_scale = 1e3);

struct DeformResult {
  Mesh mesh;
  std::vector<double> energy;  // after every global step
  int iterations = 0;
  bool converged = false;
  std::vector<int> degenerate_faces;
};

/// Local/global alternation restricted to rest + span(Q).
///
/// Energy: sum_f ||X_f C - T_f Y_f C||^2 + sum_soft w ||x_h - p_h||^2 with Y the
/// rest mesh. The reduced normal matrix is factored once; hard handles are
/// eliminated through the nullspace of their rows of Q.
class DeformSolver {
 public:
  DeformSolver(const SubspaceBasis& basis, Mesh rest, std::vector<Handle> handles, DeformParams params = {});

  /// Minimizer over the subspace for fixed per-face transforms.
  Mesh global_step(const std::vector<Eigen::Matrix3d>& transforms) const;
  double energy(const Mesh& current, const std::vector<Eigen::Matrix3d>& transforms) const;
  DeformResult run() const;
  DeformResult run_from(const Mesh& start) const;

  const Mesh& rest() const { return rest_; }

 private:
  Eigen::VectorXd face_targets(const std::vector<Eigen::Matrix3d>& transforms) const;

  SubspaceBasis basis_;
  Mesh rest_;
  std::vector<Handle> handles_;
  DeformParams params_;
  SparseMatrix A_;           // stacked centering operators, 3 N_c x 3n
  Eigen::MatrixXd AQ_;       // A Q
  Eigen::VectorXd x0_;       // vec(rest)
  Eigen::VectorXd soft_rhs_;  // sum_soft w Q_h^T (p_h - x0_h)
  Eigen::VectorXd w_part_;   // particular solution of the hard rows
  Eigen::MatrixXd Z_;        // nullspace of the hard rows (d x d')
  Eigen::MatrixXd solve_;    // pseudo-inverse of Z^T H Z
  Eigen::MatrixXd H_;
};

DeformResult deform(const SubspaceBasis& basis, const Mesh& rest, const std::vector<Handle>& handles,
                    const DeformParams& params = {});

/// Handles file: [{"vertex":5,"target":[x,y,z],"mode":"hard"|"soft","weight":w}].
std::vector<Handle> parse_handles(const nlohmann::json& j);
nlohmann::json handles_to_json(const std::vector<Handle>& handles);

}  // namespace pmspace
