#pragma once

#include <map>
#include <optional>
#include <regex>
#include <string>

#include "edesign/service/service.hpp"

namespace edesign::service {

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  std::map<std::string, std::string> headers;
};

struct ApiResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// Transport-independent routing of the HTTP+JSON API onto SessionService.
///
///   POST /designs                      GET /designs/{id}
///   GET  /designs/{id}/policy[?format=csv]
///   GET  /designs/{id}/oc?theta=...    POST /sessions {design_id}
///   GET  /sessions/{id}                POST /sessions/{id}/outcomes {y}
///   GET  /sessions/{id}/whatif         POST /sessions/{id}/override-stop
///   POST /sessions/{id}/accept-stop
class ApiRouter {
 public:
  explicit ApiRouter(SessionService& service, std::optional<std::string> token = std::nullopt)
      : service_(service), token_(std::move(token)) {}

  ApiResponse handle(const ApiRequest& req) {
    try {
      authorize(req);
      return route(req);
    } catch (const ApiError& e) {
      return error(e.status(), e.what());
    } catch (const GridMismatch& e) {
      return error(500, e.what());
    } catch (const InvalidArgument& e) {
      return error(422, e.what());
    } catch (const std::exception& e) {
      return error(500, e.what());
    }
  }

  static ApiResponse error(int status, const std::string& message) {
    return {status, Json{{"schema_version", kApiSchemaVersion}, {"error", message}, {"status", status}}.dump()};
  }

 private:
  void authorize(const ApiRequest& req) const {
    if (!token_) return;
    const auto auth = req.headers.find("Authorization");
    if (auth != req.headers.end() && auth->second == "Bearer " + *token_) return;
    const auto api = req.headers.find("X-API-Token");
    if (api != req.headers.end() && api->second == *token_) return;
    throw ApiError(401, "missing or invalid API token");
  }

  static Json parse_body(const ApiRequest& req) {
    if (req.body.empty()) return Json::object();
    try {
      return Json::parse(req.body);
    } catch (const Json::parse_error& e) {
      throw ApiError(400, std::string("malformed JSON body: ") + e.what());
    }
  }

  static ApiResponse ok(const Json& j, int status = 200) { return {status, j.dump()}; }

  ApiResponse route(const ApiRequest& req) {
    static const std::regex design_re(R"(^/designs/([A-Za-z0-9-]+)(/policy|/oc)?$)");
    static const std::regex session_re(R"(^/sessions/([A-Za-z0-9-]+)(/outcomes|/whatif|/override-stop|/accept-stop)?$)");
    std::smatch m;
    const std::string& path = req.path;
    const std::string& method = req.method;

    if (path == "/designs") {
      require_method(method, "POST");
      auto [summary, created] = service_.create_design(parse_body(req));
      return ok(summary, created ? 201 : 200);
    }
    if (path == "/sessions") {
      require_method(method, "POST");
      return ok(service_.create_session(parse_body(req)), 201);
    }
    if (std::regex_match(path, m, design_re)) {
      const std::string id = m[1];
      const std::string sub = m[2];
      require_method(method, "GET");
      if (sub.empty()) return ok(service_.design_view(id));
      if (sub == "/policy") {
        const auto fmt = req.query.find("format");
        if (fmt != req.query.end() && fmt->second == "csv") return {200, service_.policy_csv(id), "text/csv"};
        return ok(service_.policy_view(id));
      }
      const auto theta = req.query.find("theta");
      if (theta == req.query.end()) throw ApiError(400, "theta: query parameter is required");
      double value = 0.0;
      try {
        value = io::parse_double(theta->second, "theta");
      } catch (const InvalidArgument& e) {
        throw ApiError(400, e.what());
      }
      return ok(service_.oc_view(id, value));
    }
    if (std::regex_match(path, m, session_re)) {
      const std::string id = m[1];
      const std::string sub = m[2];
      if (sub.empty()) {
        require_method(method, "GET");
        return ok(service_.session_view(id));
      }
      if (sub == "/whatif") {
        require_method(method, "GET");
        return ok(service_.whatif(id));
      }
      require_method(method, "POST");
      if (sub == "/outcomes") return ok(service_.post_outcome(id, parse_body(req)), 201);
      if (sub == "/override-stop") return ok(service_.override_stop(id));
      return ok(service_.accept_stop(id));
    }
    throw ApiError(404, "no route for " + path);
  }

  static void require_method(const std::string& got, const char* want) {
    if (got != want) throw ApiError(405, "method " + got + " not allowed");
  }

  SessionService& service_;
  std::optional<std::string> token_;
};

}  // namespace edesign::service
