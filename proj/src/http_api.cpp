#include "pmspace/http_api.hpp"

#include <httplib.h>

#include <functional>

namespace pmspace {

namespace {

using Handler = std::function<nlohmann::json(const httplib::Request&)>;

void reply(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

nlohmann::json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::exception& e) {
    throw ServiceError(400, {{"code", "bad_request"}, {"ids", nlohmann::json::array()}, {"message", e.what()}});
  }
}

httplib::Server::Handler wrap(int ok_status, Handler h) {
  return [ok_status, h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
    try {
      reply(res, ok_status, h(req));
    } catch (const ServiceError& e) {
      reply(res, e.status(), e.body());
    } catch (const Error& e) {
      reply(res, 422, error_to_json(e));
    } catch (const std::exception& e) {
      reply(res, 500, {{"code", "internal"}, {"ids", nlohmann::json::array()}, {"message", e.what()}});
    }
  };
}

}  // namespace

void mount_routes(httplib::Server& server, SessionManager& sessions) {
  SessionManager* s = &sessions;
  const std::string id = R"(/sessions/([A-Za-z0-9]+))";
  server.Post("/sessions", wrap(201, [s](const httplib::Request& r) { return s->create(parse_body(r)); }));
  server.Get(id, wrap(200, [s](const httplib::Request& r) { return s->status(r.matches[1]); }));
  server.Delete(id, wrap(200, [s](const httplib::Request& r) {
    if (!s->remove(r.matches[1])) {
      throw ServiceError(404, {{"code", "not_found"}, {"ids", nlohmann::json::array()},
                               {"message", "no session " + std::string(r.matches[1])}});
    }
    return nlohmann::json{{"deleted", std::string(r.matches[1])}};
  }));
  server.Put(id + "/cases",
             wrap(202, [s](const httplib::Request& r) { return s->set_cases(r.matches[1], parse_body(r)); }));
  server.Get(id + "/analysis", wrap(200, [s](const httplib::Request& r) { return s->analysis(r.matches[1]); }));
  server.Post(id + "/bandpass",
              wrap(200, [s](const httplib::Request& r) { return s->bandpass(r.matches[1], parse_body(r)); }));
  server.Post(id + "/deform",
              wrap(200, [s](const httplib::Request& r) { return s->deform(r.matches[1], parse_body(r)); }));
  server.Post(id + "/dual", wrap(200, [s](const httplib::Request& r) { return s->dual(r.matches[1], parse_body(r)); }));
  server.Get(id + "/export", wrap(200, [s](const httplib::Request& r) { return s->export_session(r.matches[1]); }));
}

}  // namespace pmspace
