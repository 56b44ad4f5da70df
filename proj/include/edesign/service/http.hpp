#pragma once

#include <httplib.h>

#include "edesign/service/api.hpp"

namespace edesign::service {

/// Forwards every request under the API prefixes to the router.
inline void bind_routes(httplib::Server& server, ApiRouter& router) {
  auto forward = [&router](const httplib::Request& req, httplib::Response& res) {
    ApiRequest api{req.method, req.path, {}, req.body, {}};
    for (const auto& [k, v] : req.params) api.query.emplace(k, v);
    for (const auto& [k, v] : req.headers) api.headers.emplace(k, v);
    const ApiResponse out = router.handle(api);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  for (const char* pattern : {R"(/designs(/.*)?)", R"(/sessions(/.*)?)"}) {
    server.Get(pattern, forward);
    server.Post(pattern, forward);
  }
}

}  // namespace edesign::service
