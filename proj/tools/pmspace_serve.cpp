#include "pmspace/http_api.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"JSON session service for pmspace", "pmspace_serve"};
  std::string host = "127.0.0.1";
  int port = 8080;
  app.add_option("--host", host, "bind address")->capture_default_str();
  app.add_option("--port", port, "port (0 picks a free one)")->capture_default_str();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  pmspace::SessionManager sessions;
  httplib::Server server;
  pmspace::mount_routes(server, sessions);
  if (port == 0) {
    port = server.bind_to_any_port(host);
  } else if (!server.bind_to_port(host, port)) {
    std::cerr << "cannot bind " << host << ":" << port << "\n";
    return 1;
  }
  std::cerr << "listening on " << host << ":" << port << "\n";
  return server.listen_after_bind() ? 0 : 1;
}
