#include "pmspace/deform.hpp"

#include "pmspace/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace pmspace {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Eigen::Matrix3Xd centered(const Eigen::Matrix3Xd& X) { return X.colwise() - X.rowwise().mean(); }

// Pseudo-inverse of a symmetric PSD matrix, dropping eigenvalues below
// 1e-12 of the largest.
MatrixXd psd_pinv(const MatrixXd& H) {
  if (H.size() == 0) return H;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (H + H.transpose()));
  const VectorXd& ev = eig.eigenvalues();
  const double cut = 1e-12 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  VectorXd inv = VectorXd::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > cut) inv(i) = 1.0 / ev(i);
  }
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

std::string to_string(Energy e) { return e == Energy::ARAP ? "arap" : "asap"; }

Energy energy_from_string(const std::string& name) {
  if (name == "arap" || name == "ARAP") return Energy::ARAP;
  if (name == "asap" || name == "ASAP") return Energy::ASAP;
  throw Error("invalid_argument", "unknown energy '" + name + "' (arap|asap)");
}

std::vector<Eigen::Matrix3d> local_step(const Mesh& rest, const Mesh& current, Energy energy,
                                        std::vector<int>* degenerate, double min_scale, double max_scale) {
  if (rest.num_vertices() != current.num_vertices() || rest.num_faces() != current.num_faces()) {
    throw Error("invalid_argument", "rest and current meshes differ in topology");
  }
  std::vector<Eigen::Matrix3d> out(rest.num_faces(), Eigen::Matrix3d::Identity());
  const double scale = rest.bbox_diagonal();
  for (int f = 0; f < rest.num_faces(); ++f) {
    const Eigen::Matrix3Xd P = centered(current.face_vertices(f));
    const Eigen::Matrix3Xd Y = centered(rest.face_vertices(f));
    const Eigen::Matrix3d S = P * Y.transpose();
    if (P.norm() <= 1e-12 * scale || S.norm() == 0.0) {
      if (degenerate) degenerate->push_back(f);
      continue;
    }
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(S, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) D(2, 2) = -1.0;
    Eigen::Matrix3d R = svd.matrixU() * D * svd.matrixV().transpose();
    if (energy == Energy::ASAP) {
      const double s = (D * svd.singularValues().asDiagonal()).trace() / Y.squaredNorm();
      R *= std::clamp(s, min_scale, max_scale);
    }
    out[f] = R;
  }
  return out;
}

DeformSolver::DeformSolver(const SubspaceBasis& basis, Mesh rest, std::vector<Handle> handles, DeformParams params)
    : basis_(basis), rest_(std::move(rest)), handles_(std::move(handles)), params_(params) {
  const int n = rest_.num_vertices();
  if (3 * n != basis.Q.rows()) throw Error("invalid_argument", "rest mesh does not match the basis");
  if (params_.iterations < 1) throw Error("invalid_argument", "iterations must be positive");
  std::set<int> seen;
  for (const Handle& h : handles_) {
    if (h.vertex < 0 || h.vertex >= n) throw Error("invalid_argument", "handle vertex out of range", {h.vertex});
    if (!seen.insert(h.vertex).second) throw Error("invalid_argument", "duplicate handle vertex", {h.vertex});
    if (!h.hard && h.weight < 0.0) throw Error("invalid_argument", "soft weights must be positive", {h.vertex});
  }

  // rows 3*corner + axis hold the centered corner coordinate
  std::vector<Eigen::Triplet<double>> trip;
  int corner = 0;
  for (const Face& face : rest_.faces()) {
    const int k = static_cast<int>(face.size());
    for (int i = 0; i < k; ++i, ++corner) {
      for (int a = 0; a < 3; ++a) {
        for (int j = 0; j < k; ++j) {
          trip.emplace_back(3 * corner + a, coord_index(n, face[j], a), (i == j ? 1.0 : 0.0) - 1.0 / k);
        }
      }
    }
  }
  A_.resize(3 * corner, 3 * n);
  A_.setFromTriplets(trip.begin(), trip.end());
  A_.makeCompressed();

  const MatrixXd& Q = basis.Q;
  const Eigen::Index d = Q.cols();
  x0_ = rest_.vectorized();
  AQ_ = A_ * Q;
  H_ = AQ_.transpose() * AQ_;
  soft_rhs_ = VectorXd::Zero(d);
  std::vector<const Handle*> hard;
  for (const Handle& h : handles_) {
    if (h.hard) {
      hard.push_back(&h);
      continue;
    }
    const double w = h.weight > 0.0 ? h.weight : params_.soft_weight;
    for (int a = 0; a < 3; ++a) {
      const int c = coord_index(n, h.vertex, a);
      H_ += w * Q.row(c).transpose() * Q.row(c);
      soft_rhs_ += w * Q.row(c).transpose() * (h.target(a) - x0_(c));
    }
  }

  if (hard.empty()) {
    w_part_ = VectorXd::Zero(d);
    Z_ = MatrixXd::Identity(d, d);
  } else {
    MatrixXd C(3 * hard.size(), d);
    VectorXd e(3 * hard.size());
    for (std::size_t i = 0; i < hard.size(); ++i) {
      for (int a = 0; a < 3; ++a) {
        const int c = coord_index(n, hard[i]->vertex, a);
        C.row(3 * i + a) = Q.row(c);
        e(3 * i + a) = hard[i]->target(a) - x0_(c);
      }
    }
    Eigen::JacobiSVD<MatrixXd> svd(C, Eigen::ComputeFullV | Eigen::ComputeThinU);
    const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) rank += svd.singularValues()(i) > 1e-10 * smax;
    VectorXd inv = VectorXd::Zero(svd.singularValues().size());
    for (Eigen::Index i = 0; i < rank; ++i) inv(i) = 1.0 / svd.singularValues()(i);
    w_part_ = svd.matrixV().leftCols(inv.size()) * inv.asDiagonal() * svd.matrixU().transpose() * e;
    const double residual = (C * w_part_ - e).norm();
    if (residual > 1e-9 * std::max(1.0, e.norm())) {
      std::vector<int> ids;
      for (const Handle* h : hard) ids.push_back(h->vertex);
      std::ostringstream msg;
      msg << "hard handles are inconsistent with the subspace (constraint residual " << residual << ")";
      throw Error("infeasible_constraints", msg.str(), ids);
    }
    Z_ = svd.matrixV().rightCols(d - rank);
  }
  solve_ = psd_pinv(Z_.transpose() * H_ * Z_);
}

VectorXd DeformSolver::face_targets(const std::vector<Eigen::Matrix3d>& transforms) const {
  VectorXd t(A_.rows());
  int corner = 0;
  for (int f = 0; f < rest_.num_faces(); ++f) {
    const Eigen::Matrix3Xd Y = centered(rest_.face_vertices(f));
    const Eigen::Matrix3Xd TY = transforms[f] * Y;
    for (Eigen::Index i = 0; i < TY.cols(); ++i, ++corner) t.segment<3>(3 * corner) = TY.col(i);
  }
  return t;
}

Mesh DeformSolver::global_step(const std::vector<Eigen::Matrix3d>& transforms) const {
  if (static_cast<int>(transforms.size()) != rest_.num_faces()) {
    throw Error("invalid_argument", "one transform per face expected");
  }
  const VectorXd b = AQ_.transpose() * (face_targets(transforms) - A_ * x0_) + soft_rhs_;
  const VectorXd y = solve_ * (Z_.transpose() * (b - H_ * w_part_));
  const VectorXd W = w_part_ + Z_ * y;
  return rest_.with_vectorized(x0_ + basis_.Q * W);
}

double DeformSolver::energy(const Mesh& current, const std::vector<Eigen::Matrix3d>& transforms) const {
  const VectorXd x = current.vectorized();
  double e = (A_ * x - face_targets(transforms)).squaredNorm();
  for (const Handle& h : handles_) {
    if (h.hard) continue;
    const double w = h.weight > 0.0 ? h.weight : params_.soft_weight;
    e += w * (current.vertex(h.vertex) - h.target).squaredNorm();
  }
  return e;
}

DeformResult DeformSolver::run_from(const Mesh& start) const {
  DeformResult out;
  out.mesh = start;
  const double scale = rest_.bbox_diagonal();
  for (int it = 0; it < params_.iterations; ++it) {
    std::vector<int> degenerate;
    const auto T = local_step(rest_, out.mesh, params_.energy, &degenerate, params_.min_scale, params_.max_scale);
    Mesh next = global_step(T);
    out.energy.push_back(energy(next, T));
    const double motion = (next.vertices() - out.mesh.vertices()).cwiseAbs().maxCoeff() / scale;
    out.mesh = std::move(next);
    out.degenerate_faces = std::move(degenerate);
    out.iterations = it + 1;
    if (motion < params_.convergence_tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

DeformResult DeformSolver::run() const { return run_from(rest_); }

DeformResult deform(const SubspaceBasis& basis, const Mesh& rest, const std::vector<Handle>& handles,
                    const DeformParams& params) {
  if (handles.empty()) {
    DeformResult out;
    out.mesh = rest;
    out.converged = true;
    return out;
  }
  return DeformSolver(basis, rest, handles, params).run();
}

std::vector<Handle> parse_handles(const nlohmann::json& j) {
  if (!j.is_array()) throw Error("parse_error", "handles must be a JSON array");
  std::vector<Handle> out;
  for (const auto& item : j) {
    try {
      Handle h;
      h.vertex = item.at("vertex").get<int>();
      const auto& t = item.at("target");
      if (!t.is_array() || t.size() != 3) throw Error("parse_error", "handle target must be [x,y,z]");
      h.target = Vec3(t[0].get<double>(), t[1].get<double>(), t[2].get<double>());
      const std::string mode = item.value("mode", "soft");
      if (mode != "hard" && mode != "soft") throw Error("parse_error", "handle mode must be hard or soft");
      h.hard = mode == "hard";
      h.weight = item.value("weight", 0.0);
      out.push_back(h);
    } catch (const nlohmann::json::exception& e) {
      throw Error("parse_error", std::string("bad handle entry: ") + e.what());
    }
  }
  return out;
}

nlohmann::json handles_to_json(const std::vector<Handle>& handles) {
  nlohmann::json out = nlohmann::json::array();
  for (const Handle& h : handles) {
    nlohmann::json item{{"vertex", h.vertex},
                        {"target", {h.target.x(), h.target.y(), h.target.z()}},
                        {"mode", h.hard ? "hard" : "soft"}};
    if (!h.hard && h.weight > 0.0) item["weight"] = h.weight;
    out.push_back(item);
  }
  return out;
}

}  // namespace pmspace
