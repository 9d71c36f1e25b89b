#include "pmspace/service.hpp"

#include "pmspace/deform.hpp"
#include "pmspace/dual.hpp"

#include <condition_variable>
#include <sstream>
#include <thread>
#include <vector>

namespace pmspace {

namespace {

// Everything derived from one assignment revision.
struct Computed {
  long revision = 0;
  CaseAssignment assignment;
  SubspaceBasis basis;
  Spectrum spectrum;
  nlohmann::json analysis;
};

double relative_residual(const SubspaceBasis& basis, const Mesh& mesh, const Mesh& source) {
  const Eigen::VectorXd d = mesh.vectorized() - source.vectorized();
  return subspace_residual(basis, d);
}

ServiceError domain_error(const Error& e) { return ServiceError(422, error_to_json(e)); }

ServiceError bad_request(const std::string& message) {
  return ServiceError(400, {{"code", "bad_request"}, {"ids", nlohmann::json::array()}, {"message", message}});
}

}  // namespace

struct Session {
  std::string id;
  Mesh source;

  mutable std::mutex mutex;
  mutable std::condition_variable changed;
  CaseAssignment assignment;
  long revision = 0;
  std::shared_ptr<const Computed> computed;
  std::optional<nlohmann::json> failure;  // recompute error of the current revision
  std::string stage = "queued";
  double progress = 0.0;
  Mesh current;

  // serializes the compute endpoints of this session
  std::mutex op_mutex;
  std::vector<std::thread> workers;

  ~Session() {
    for (auto& t : workers) {
      if (t.joinable()) t.join();
    }
  }

  bool ready_locked() const { return computed && computed->revision == revision; }

  nlohmann::json status_locked() const {
    nlohmann::json j = {{"id", id}, {"revision", revision}, {"ready", ready_locked()}, {"stage", stage},
                        {"progress", progress}};
    if (failure) j["error"] = *failure;
    return j;
  }

  void report(long rev, const std::string& what, double fraction) {
    std::lock_guard lock(mutex);
    if (rev != revision) return;
    stage = what;
    progress = fraction;
  }

  void recompute(long rev, CaseAssignment cases) {
    try {
      report(rev, "assembling", 0.1);
      auto cm = std::make_shared<const ConstraintMatrix>(assemble(source, cases));
      report(rev, "nullspace", 0.3);
      SubspaceBasis basis = nullspace_basis(cm);
      report(rev, "spectrum", 0.7);
      auto out = std::make_shared<Computed>();
      if (basis.ndof > 0) out->spectrum = eigenshapes(basis, graph_laplacian(source));
      report(rev, "analysis", 0.85);
      const auto flags = containment_flags(source, basis);
      out->analysis = analysis_json(source, cases, basis, &flags);
      out->revision = rev;
      out->assignment = std::move(cases);
      out->basis = std::move(basis);
      std::lock_guard lock(mutex);
      if (rev == revision) {
        computed = std::move(out);
        stage = "ready";
        progress = 1.0;
      }
    } catch (const Error& e) {
      std::lock_guard lock(mutex);
      if (rev == revision) {
        failure = error_to_json(e);
        stage = "failed";
      }
    } catch (const std::exception& e) {
      std::lock_guard lock(mutex);
      if (rev == revision) {
        failure = nlohmann::json{{"code", "internal"}, {"ids", nlohmann::json::array()}, {"message", e.what()}};
        stage = "failed";
      }
    }
    changed.notify_all();
  }

  // caller holds `mutex`
  void start_locked(CaseAssignment cases) {
    ++revision;
    failure.reset();
    stage = "queued";
    progress = 0.0;
    current = source;
    workers.emplace_back([this, rev = revision, cases = std::move(cases)]() mutable { recompute(rev, std::move(cases)); });
  }

  // Snapshot of the result for the current revision; throws 409 when the
  // request targets another revision or the recompute is still running.
  std::shared_ptr<const Computed> require_ready(const nlohmann::json& body) const {
    std::lock_guard lock(mutex);
    if (body.contains("revision") && body["revision"].get<long>() != revision) {
      nlohmann::json j = status_locked();
      j["status"] = "conflict";
      j["message"] = "request targets revision " + std::to_string(body["revision"].get<long>());
      throw ServiceError(409, j);
    }
    if (failure) throw ServiceError(422, *failure);
    if (!ready_locked()) {
      nlohmann::json j = status_locked();
      j["status"] = "recomputing";
      throw ServiceError(409, j);
    }
    return computed;
  }
};

SessionManager::SessionManager() = default;

SessionManager::~SessionManager() {
  std::lock_guard lock(mutex_);
  sessions_.clear();
}

std::shared_ptr<Session> SessionManager::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) {
    throw ServiceError(404, {{"code", "not_found"}, {"ids", nlohmann::json::array()}, {"message", "no session " + id}});
  }
  return it->second;
}

nlohmann::json SessionManager::create(const nlohmann::json& body) {
  Mesh mesh;
  CaseAssignment cases;
  try {
    if (body.contains("obj")) {
      std::istringstream in(body.at("obj").get<std::string>());
      mesh = parse_obj(in, "payload");
    } else {
      mesh = mesh_from_json(body.contains("mesh") ? body.at("mesh") : body);
    }
    cases = CaseAssignment::uniform(mesh, CaseKind::Affine);
    if (body.contains("cases")) cases = apply_assignment_delta(cases, body.at("cases"));
  } catch (const Error& e) {
    throw domain_error(e);
  } catch (const nlohmann::json::exception& e) {
    throw bad_request(e.what());
  }
  auto s = std::make_shared<Session>();
  s->source = mesh;
  s->current = mesh;
  {
    std::lock_guard lock(mutex_);
    s->id = "s" + std::to_string(next_id_++);
    sessions_[s->id] = s;
  }
  std::lock_guard lock(s->mutex);
  s->assignment = cases;
  s->start_locked(cases);
  return s->status_locked();
}

nlohmann::json SessionManager::set_cases(const std::string& id, const nlohmann::json& body) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  if (body.contains("revision") && body["revision"].get<long>() != s->revision) {
    nlohmann::json j = s->status_locked();
    j["status"] = "conflict";
    throw ServiceError(409, j);
  }
  CaseAssignment next;
  try {
    next = apply_assignment_delta(s->assignment, body.contains("cases") ? body.at("cases") : body);
  } catch (const Error& e) {
    throw domain_error(e);
  } catch (const nlohmann::json::exception& e) {
    throw bad_request(e.what());
  }
  s->assignment = next;
  s->start_locked(std::move(next));
  return s->status_locked();
}

nlohmann::json SessionManager::status(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  return s->status_locked();
}

nlohmann::json SessionManager::analysis(const std::string& id) const {
  auto s = find(id);
  const auto c = s->require_ready(nlohmann::json::object());
  nlohmann::json j = c->analysis;
  j["revision"] = c->revision;
  j["ready"] = true;
  j["frequencies"] = c->spectrum.frequencies;
  return j;
}

nlohmann::json SessionManager::bandpass(const std::string& id, const nlohmann::json& body) {
  auto s = find(id);
  std::lock_guard op(s->op_mutex);
  const auto c = s->require_ready(body);
  if (c->basis.ndof == 0) throw domain_error(Error("empty_subspace", "the subspace is {0}"));
  BandpassResult r;
  try {
    r = bandpass_apply(s->source, c->spectrum, body.at("low").get<double>(), body.at("high").get<double>(),
                       body.value("gain", 1.0));
  } catch (const Error& e) {
    throw domain_error(e);
  } catch (const nlohmann::json::exception& e) {
    throw bad_request(e.what());
  }
  {
    std::lock_guard lock(s->mutex);
    if (s->revision == c->revision) s->current = r.mesh;
  }
  return {{"revision", c->revision},
          {"ready", true},
          {"mesh", mesh_to_json(r.mesh)},
          {"used", r.used},
          {"notice", r.notice},
          {"residual", relative_residual(c->basis, r.mesh, s->source)},
          {"planarity_max", planarity_report(r.mesh).max}};
}

nlohmann::json SessionManager::deform(const std::string& id, const nlohmann::json& body) {
  auto s = find(id);
  std::lock_guard op(s->op_mutex);
  const auto c = s->require_ready(body);
  Mesh start;
  {
    std::lock_guard lock(s->mutex);
    start = s->current;
  }
  DeformResult r;
  try {
    const auto handles = parse_handles(body.value("handles", nlohmann::json::array()));
    DeformParams params;
    params.energy = energy_from_string(body.value("energy", std::string("arap")));
    params.iterations = body.value("iterations", params.iterations);
    params.soft_weight = body.value("soft_weight", params.soft_weight);
    if (handles.empty()) {
      r.mesh = start;
      r.converged = true;
    } else {
      r = DeformSolver(c->basis, s->source, handles, params).run_from(start);
    }
  } catch (const Error& e) {
    throw domain_error(e);
  } catch (const nlohmann::json::exception& e) {
    throw bad_request(e.what());
  }
  {
    std::lock_guard lock(s->mutex);
    if (s->revision == c->revision) s->current = r.mesh;
  }
  return {{"revision", c->revision},
          {"ready", true},
          {"mesh", mesh_to_json(r.mesh)},
          {"energy", r.energy},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"degenerate_faces", r.degenerate_faces},
          {"residual", relative_residual(c->basis, r.mesh, s->source)}};
}

nlohmann::json SessionManager::dual(const std::string& id, const nlohmann::json& body) {
  auto s = find(id);
  std::lock_guard op(s->op_mutex);
  const auto c = s->require_ready(body);
  Mesh primal;
  {
    std::lock_guard lock(s->mutex);
    primal = s->current;
  }
  nlohmann::json out = {{"revision", c->revision}, {"ready", true}, {"on", body.value("on", true)}};
  if (!body.value("on", true)) {
    out["mesh"] = mesh_to_json(primal);
    return out;
  }
  try {
    if (!body.contains("edit")) {
      const DualMesh d = polar_dual(primal);
      out["mesh"] = mesh_to_json(d.mesh);
      out["sidecar"] = dual_sidecar(d);
      return out;
    }
    const auto& e = body.at("edit");
    DualEditRequest req;
    const std::string mode = e.value("mode", std::string("eigenshape"));
    if (mode == "eigenshape") {
      req.mode = DualEditRequest::Mode::Eigenshape;
    } else if (mode == "bandpass") {
      req.mode = DualEditRequest::Mode::Bandpass;
    } else {
      throw bad_request("dual edit mode must be eigenshape or bandpass");
    }
    req.index = e.value("index", -1);
    req.amplitude = e.value("amplitude", req.amplitude);
    req.low = e.value("low", 0.0);
    req.high = e.value("high", 0.0);
    req.gain = e.value("gain", 0.0);
    const DualMesh d = polar_dual(primal);
    const CaseKind kind = case_kind_from_string(body.value("dual_cases", std::string("affine")));
    const DualEditResult r = dual_edit(primal, CaseAssignment::uniform(d.mesh, kind), req);
    out["mesh"] = mesh_to_json(r.dual.mesh);
    out["primal"] = mesh_to_json(r.primal);
    out["max_residual"] = r.max_residual;
    out["dual_residual"] = r.dual_residual;
    out["sidecar"] = dual_sidecar(r.dual);
  } catch (const Error& err) {
    throw domain_error(err);
  } catch (const nlohmann::json::exception& err) {
    throw bad_request(err.what());
  }
  return out;
}

nlohmann::json SessionManager::export_session(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  return {{"revision", s->revision},
          {"ready", s->ready_locked()},
          {"obj", to_obj_string(s->current, 12)},
          {"assignment", assignment_to_json(s->assignment)}};
}

bool SessionManager::remove(const std::string& id) {
  std::shared_ptr<Session> s;
  {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return false;
    s = std::move(it->second);
    sessions_.erase(it);
  }
  return true;  // the last reference joins the workers
}

bool SessionManager::wait_ready(const std::string& id, std::chrono::milliseconds timeout) const {
  auto s = find(id);
  std::unique_lock lock(s->mutex);
  return s->changed.wait_for(lock, timeout, [&] { return s->ready_locked() || s->failure.has_value(); }) &&
         s->ready_locked();
}

std::size_t SessionManager::size() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

}  // namespace pmspace
