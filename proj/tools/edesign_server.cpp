#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "edesign/service/http.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Trial monitoring service: HTTP+JSON API over solved e-value designs"};
  std::string db = "edesign.sqlite";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string token;
  app.add_option("--db", db, "SQLite store path");
  app.add_option("--host", host, "bind address");
  app.add_option("--port", port, "listen port")->check(CLI::Range(1, 65535));
  app.add_option("--token", token, "API token required in 'Authorization: Bearer <token>'");
  CLI11_PARSE(app, argc, argv);

  try {
    edesign::service::Store store(db);
    edesign::service::SessionService service(store);
    edesign::service::ApiRouter router(service, token.empty() ? std::nullopt : std::optional<std::string>(token));
    httplib::Server server;
    edesign::service::bind_routes(server, router);
    std::cout << "listening on " << host << ":" << port << " (store " << db << ")\n";
    if (!server.listen(host, port)) {
      std::cerr << "cannot listen on " << host << ":" << port << "\n";
      return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
