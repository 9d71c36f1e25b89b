#pragma once

#include "pmspace/service.hpp"

namespace httplib {
class Server;
}

namespace pmspace {

/// Routes of the JSON API:
///   POST   /sessions                 create (201)
///   GET    /sessions/{id}            status {revision, ready, stage, progress}
///   DELETE /sessions/{id}
///   PUT    /sessions/{id}/cases      assignment delta (202)
///   GET    /sessions/{id}/analysis
///   POST   /sessions/{id}/bandpass
///   POST   /sessions/{id}/deform
///   POST   /sessions/{id}/dual
///   GET    /sessions/{id}/export
/// Errors come back as JSON with 400 (malformed), 404, 409 (stale revision or
/// recomputing) or 422 (domain error {code, ids, message}).
void mount_routes(httplib::Server& server, SessionManager& sessions);

}  // namespace pmspace
