#pragma once

#include "pmspace/basis.hpp"
#include "pmspace/json_io.hpp"
#include "pmspace/shapes.hpp"

#include <json.hpp>

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>

namespace pmspace {

/// Failure with an HTTP-style status and a JSON body ({code, ids, message} for
/// domain errors, {status, revision, ready} for conflicts).
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, nlohmann::json body)
      : std::runtime_error(body.dump()), status_(status), body_(std::move(body)) {}
  int status() const { return status_; }
  const nlohmann::json& body() const { return body_; }

 private:
  int status_;
  nlohmann::json body_;
};

struct Session;

/// Sessions keyed by id. Every mutation of the case assignment bumps the
/// revision and starts a background basis + spectrum recompute; compute
/// endpoints answer 409 until the result for the current revision is in.
/// Requests may carry the revision they were issued against and get 409 when
/// it is stale.
class SessionManager {
 public:
  SessionManager();
  ~SessionManager();
  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  /// Body: {"mesh":{vertices,faces}} or {"obj":"..."}; optional "cases".
  nlohmann::json create(const nlohmann::json& body);
  /// Body: {"cases": delta, "revision": n?}. Returns {revision, ready}.
  nlohmann::json set_cases(const std::string& id, const nlohmann::json& body);
  nlohmann::json status(const std::string& id) const;
  nlohmann::json analysis(const std::string& id) const;
  /// Body: {"low","high","gain","revision"?}.
  nlohmann::json bandpass(const std::string& id, const nlohmann::json& body);
  /// Body: {"handles":[...], "energy", "iterations", "soft_weight", "revision"?}.
  nlohmann::json deform(const std::string& id, const nlohmann::json& body);
  /// Body: {"on":bool, "edit":{...}?, "dual_cases"?, "revision"?}.
  nlohmann::json dual(const std::string& id, const nlohmann::json& body);
  nlohmann::json export_session(const std::string& id) const;
  bool remove(const std::string& id);

  /// Blocks until the session's current revision is computed (or failed).
  bool wait_ready(const std::string& id, std::chrono::milliseconds timeout) const;
  std::size_t size() const;

 private:
  std::shared_ptr<Session> find(const std::string& id) const;

  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  long next_id_ = 1;
};

}  // namespace pmspace
