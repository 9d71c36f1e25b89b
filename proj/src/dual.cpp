#include "pmspace/dual.hpp"

#include "pmspace/error.hpp"
#include "pmspace/shapes.hpp"
#include "pmspace/topology.hpp"

#include <Eigen/QR>

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace pmspace {

namespace {

std::vector<double> plane_offsets(const std::vector<FacePlane>& planes, const Vec3& c) {
  std::vector<double> out;
  for (const auto& p : planes) out.push_back(p.normal.dot(p.centroid - c));
  return out;
}

std::vector<int> close_faces(const std::vector<double>& offsets, double tol) {
  std::vector<int> out;
  for (std::size_t f = 0; f < offsets.size(); ++f) {
    if (std::abs(offsets[f]) < tol) out.push_back(static_cast<int>(f));
  }
  return out;
}

}  // namespace

DualMesh polar_dual(const Mesh& mesh, const DualOptions& options) {
  if (!is_closed(mesh)) throw Error("open_mesh", "polar duals are only built for closed meshes");
  if (!(options.scale > 0.0)) throw Error("invalid_argument", "polarity scale must be positive");
  std::vector<FacePlane> planes;
  for (int f = 0; f < mesh.num_faces(); ++f) planes.push_back(face_plane(mesh, f));
  const double tol = options.offset_tol * mesh.bbox_diagonal();

  DualMesh out;
  out.scale = options.scale;
  out.center = options.center ? *options.center : Vec3(mesh.vertices().rowwise().mean());
  std::vector<double> delta = plane_offsets(planes, out.center);
  std::vector<int> bad = close_faces(delta, tol);
  if (!bad.empty() && !options.center) {
    // nudge the center along a fixed set of directions at growing radii and
    // keep the candidate whose nearest face plane is farthest away
    const double diag = mesh.bbox_diagonal();
    std::vector<Vec3> dirs;
    for (int x = -1; x <= 1; ++x) {
      for (int y = -1; y <= 1; ++y) {
        for (int z = -1; z <= 1; ++z) {
          if (x || y || z) dirs.push_back(Vec3(x + 0.1 * y, y + 0.1 * z, z + 0.1 * x).normalized());
        }
      }
    }
    const Vec3 start = out.center;
    for (double radius : {0.01, 0.02, 0.05, 0.1, 0.2}) {
      double best = 0.0;
      for (const Vec3& d : dirs) {
        const Vec3 c = start + radius * diag * d;
        const std::vector<double> offs = plane_offsets(planes, c);
        double nearest = std::numeric_limits<double>::infinity();
        for (double o : offs) nearest = std::min(nearest, std::abs(o));
        if (nearest >= tol && nearest > best) {
          best = nearest;
          out.center = c;
          delta = offs;
        }
      }
      if (best > 0.0) {
        bad.clear();
        out.center_moved = true;
        break;
      }
    }
  }
  if (!bad.empty()) {
    std::ostringstream msg;
    msg << "face planes pass through the polarity center:";
    for (int f : bad) msg << ' ' << f;
    throw Error("plane_through_center", msg.str(), bad);
  }

  Eigen::Matrix3Xd U(3, mesh.num_faces());
  const double rho2 = options.scale * options.scale;
  for (int f = 0; f < mesh.num_faces(); ++f) U.col(f) = out.center + rho2 * planes[f].normal / delta[f];
  out.mesh = Mesh(std::move(U), vertex_face_fans(mesh));
  return out;
}

Reconstruction primal_from_dual(const DualMesh& dual, const Mesh& primal_topology, double residual_tol) {
  const int n = primal_topology.num_vertices();
  if (dual.mesh.num_vertices() != primal_topology.num_faces() || dual.mesh.num_faces() != n) {
    throw Error("invalid_argument", "dual does not match the primal topology");
  }
  const double rho2 = dual.scale * dual.scale;
  Reconstruction out;
  out.residuals.assign(n, 0.0);
  Eigen::Matrix3Xd V(3, n);
  std::vector<int> failed;
  std::ostringstream detail;
  for (int v = 0; v < n; ++v) {
    const Face& around = dual.mesh.face(v);
    const int k = static_cast<int>(around.size());
    Eigen::MatrixXd M(k, 3);
    for (int i = 0; i < k; ++i) M.row(i) = (dual.mesh.vertex(around[i]) - dual.center).transpose();
    const Eigen::VectorXd rhs = Eigen::VectorXd::Constant(k, rho2);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
    if (qr.rank() < 3) {
      failed.push_back(v);
      detail << " " << v << "(rank " << qr.rank() << ")";
      out.residuals[v] = std::numeric_limits<double>::infinity();
      V.col(v).setZero();
      continue;
    }
    const Vec3 y = qr.solve(rhs);
    // each row measures n_f . (x - c) - delta_f relative to delta_f
    double r = 0.0;
    for (int i = 0; i < k; ++i) r = std::max(r, std::abs(M.row(i).dot(y) - rho2) / rho2);
    out.residuals[v] = r;
    out.max_residual = std::max(out.max_residual, r);
    V.col(v) = dual.center + y;
    if (r > residual_tol) {
      failed.push_back(v);
      detail << " " << v << "(" << r << ")";
    }
  }
  if (!failed.empty()) {
    throw Error("inconsistent_dual", "dual faces around these primal vertices are not planar:" + detail.str(), failed);
  }
  out.mesh = primal_topology.with_vertices(std::move(V));
  return out;
}

DualMesh dual_of_dual(const DualMesh& dual) {
  DualOptions opts;
  opts.center = dual.center;
  opts.scale = dual.scale;
  return polar_dual(dual.mesh, opts);
}

DualEditResult dual_edit(const Mesh& mesh, const CaseAssignment& dual_cases, const DualEditRequest& edit,
                         const DualOptions& options) {
  DualEditResult out;
  const DualMesh dual = polar_dual(mesh, options);
  const SubspaceBasis basis = build_subspace(dual.mesh, dual_cases);
  const int nd = dual.mesh.num_vertices();
  Eigen::VectorXd field = Eigen::VectorXd::Zero(3 * nd);
  const double size = dual.mesh.bbox_diagonal();
  switch (edit.mode) {
    case DualEditRequest::Mode::Eigenshape: {
      const Spectrum s = eigenshapes(basis, graph_laplacian(dual.mesh));
      int k = edit.index;
      if (k < 0) {
        const double eps = 1e-9 * std::max(1.0, s.frequencies.back());
        k = 0;
        while (k + 1 < static_cast<int>(s.frequencies.size()) && s.frequencies[k] <= eps) ++k;
      }
      if (k >= static_cast<int>(s.frequencies.size())) {
        throw Error("invalid_argument", "eigenshape index " + std::to_string(k) + " out of range");
      }
      field = edit.amplitude * size * s.shapes.col(k);
      break;
    }
    case DualEditRequest::Mode::Bandpass: {
      const Spectrum s = eigenshapes(basis, graph_laplacian(dual.mesh));
      field = bandpass_apply(dual.mesh, s, edit.low, edit.high, edit.gain).mesh.vectorized() - dual.mesh.vectorized();
      break;
    }
    case DualEditRequest::Mode::Field:
      if (edit.field.size() != 3 * nd) throw Error("invalid_argument", "dual field has the wrong size");
      field = project(basis, edit.field);
      break;
  }
  out.dual_residual = subspace_residual(basis, field);
  out.dual = dual;
  out.dual.mesh = dual.mesh.displaced(field);
  Reconstruction r = primal_from_dual(out.dual, mesh);
  out.primal = std::move(r.mesh);
  out.vertex_residuals = std::move(r.residuals);
  out.max_residual = r.max_residual;
  return out;
}

nlohmann::json dual_sidecar(const DualMesh& dual) {
  std::vector<int> faces(dual.mesh.num_vertices()), vertices(dual.mesh.num_faces());
  std::iota(faces.begin(), faces.end(), 0);
  std::iota(vertices.begin(), vertices.end(), 0);
  return {{"center", {dual.center.x(), dual.center.y(), dual.center.z()}},
          {"scale", dual.scale},
          {"center_moved", dual.center_moved},
          {"dual_vertex_to_primal_face", faces},
          {"dual_face_to_primal_vertex", vertices}};
}

}  // namespace pmspace
