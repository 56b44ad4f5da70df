#include <gtest/gtest.h>

#include <filesystem>
#include <thread>

#include "edesign/service/http.hpp"

using namespace edesign;
using namespace edesign::service;
namespace fs = std::filesystem;

namespace {

Json design_request(const std::string& strategy, int n = 12, const std::string& schedule = "seq") {
  return Json{{"spec", {{"n", n}, {"theta0", 0.2}, {"theta1", 0.5}, {"alpha", 0.05}, {"beta", 0.3}}},
              {"strategy", strategy},
              {"schedule", schedule}};
}

ApiRequest request(std::string method, std::string path, const Json& body = nullptr) {
  ApiRequest r;
  r.method = std::move(method);
  r.path = std::move(path);
  if (!body.is_null()) r.body = body.dump();
  return r;
}

Json body(const ApiResponse& r) { return Json::parse(r.body); }

struct TempDb {
  fs::path path;
  explicit TempDb(const std::string& name) : path(fs::temp_directory_path() / ("edesign_" + name + ".sqlite")) {
    clean();
  }
  ~TempDb() { clean(); }
  void clean() {
    for (const char* suffix : {"", "-wal", "-shm"}) fs::remove(path.string() + suffix);
  }
};

// Posts failures until the constrained design recommends a stop (n = 15 gets there at t = 3).
std::string session_at_pending_stop(ApiRouter& api, const std::string& design_id) {
  const std::string id = body(api.handle(request("POST", "/sessions", {{"design_id", design_id}})))["id"];
  for (int k = 0; k < 15; ++k) {
    const Json s = body(api.handle(request("GET", "/sessions/" + id)));
    if (s["stop_pending"].get<bool>() || s["status"] != "Open") break;
    api.handle(request("POST", "/sessions/" + id + "/outcomes", {{"y", 0}}));
  }
  return id;
}

}  // namespace

TEST(Service, CreateDesignIsIdempotent) {
  Store store(":memory:");
  SessionService service(store);
  ApiRouter api(service);
  const auto first = api.handle(request("POST", "/designs", design_request("pmax")));
  ASSERT_EQ(first.status, 201) << first.body;
  const auto second = api.handle(request("POST", "/designs", design_request("pmax")));
  EXPECT_EQ(second.status, 200);
  EXPECT_EQ(body(first)["design_id"], body(second)["design_id"]);
  EXPECT_EQ(body(first)["design_id"].get<std::string>().size(), 32U);

  Json reordered = design_request("pmax");
  reordered["spec"] = {{"theta1", 0.5}, {"alpha", 0.05}, {"beta", 0.3}, {"theta0", 0.2}, {"n", 12}};
  EXPECT_EQ(body(api.handle(request("POST", "/designs", reordered)))["design_id"], body(first)["design_id"]);
  EXPECT_NE(body(api.handle(request("POST", "/designs", design_request("grow"))))["design_id"],
            body(first)["design_id"]);

  const Json summary = body(api.handle(request("GET", "/designs/" + body(first)["design_id"].get<std::string>())));
  EXPECT_LE(summary["final_size"].get<double>(), 0.05);
  EXPECT_GT(summary["final_power"].get<double>(), 0.0);
  EXPECT_EQ(summary["schedule"], "seq");
}

TEST(Service, ConcurrentIdenticalRequestsSolveOnce) {
  Store store(":memory:");
  SessionService service(store);
  std::vector<std::thread> threads;
  std::vector<std::pair<Json, bool>> results(4);
  for (int k = 0; k < 4; ++k)
    threads.emplace_back([&, k] { results[k] = service.create_design(design_request("essmin", 8)); });
  for (auto& t : threads) t.join();
  int created = 0;
  for (const auto& [summary, fresh] : results) {
    created += fresh;
    EXPECT_EQ(summary["design_id"], results[0].first["design_id"]);
  }
  EXPECT_EQ(created, 1);
}

TEST(Service, InvalidDesignsAre422) {
  Store store(":memory:");
  SessionService service(store);
  ApiRouter api(service);
  Json bad = design_request("pmax");
  bad["spec"]["theta1"] = 0.1;
  auto r = api.handle(request("POST", "/designs", bad));
  EXPECT_EQ(r.status, 422);
  EXPECT_NE(body(r)["error"].get<std::string>().find("spec.theta1"), std::string::npos);
  EXPECT_EQ(api.handle(request("POST", "/designs", design_request("kelly"))).status, 422);
  EXPECT_EQ(api.handle(request("POST", "/designs", design_request("pmax", 12, "5x2"))).status, 422);
  EXPECT_EQ(api.handle(request("POST", "/designs", Json::array())).status, 422);
  ApiRequest malformed = request("POST", "/designs");
  malformed.body = "{not json";
  EXPECT_EQ(api.handle(malformed).status, 400);
}

TEST(Service, RoutingErrors) {
  Store store(":memory:");
  SessionService service(store);
  ApiRouter api(service);
  EXPECT_EQ(api.handle(request("GET", "/designs/abc")).status, 404);
  EXPECT_EQ(api.handle(request("GET", "/sessions/s-0")).status, 404);
  EXPECT_EQ(api.handle(request("GET", "/nowhere")).status, 404);
  EXPECT_EQ(api.handle(request("GET", "/designs")).status, 405);
  EXPECT_EQ(api.handle(request("POST", "/sessions", Json::object())).status, 400);
  EXPECT_EQ(api.handle(request("POST", "/sessions", {{"design_id", "missing"}})).status, 404);
}

TEST(Service, TokenIsRequiredWhenConfigured) {
  Store store(":memory:");
  SessionService service(store);
  ApiRouter api(service, std::string("sesame"));
  EXPECT_EQ(api.handle(request("GET", "/designs/abc")).status, 401);
  ApiRequest bearer = request("GET", "/designs/abc");
  bearer.headers["Authorization"] = "Bearer sesame";
  EXPECT_EQ(api.handle(bearer).status, 404);
  ApiRequest header = request("GET", "/designs/abc");
  header.headers["X-API-Token"] = "sesame";
  EXPECT_EQ(api.handle(header).status, 404);
  header.headers["X-API-Token"] = "wrong";
  EXPECT_EQ(api.handle(header).status, 401);
}

TEST(Service, PolicyAndOcViews) {
  Store store(":memory:");
  SessionService service(store);
  ApiRouter api(service);
  const std::string id = body(api.handle(request("POST", "/designs", design_request("constrained"))))["design_id"];
  const Json policy = body(api.handle(request("GET", "/designs/" + id + "/policy")));
  EXPECT_EQ(policy["actions"].size(), 12U);
  EXPECT_EQ(policy["actions"][0].size(), 2001U);
  EXPECT_EQ(policy["zone_edges"].size(), 13U);
  EXPECT_EQ(policy["sidecar"]["strategy"], "constrained");

  ApiRequest csv = request("GET", "/designs/" + id + "/policy");
  csv.query["format"] = "csv";
  const auto r = api.handle(csv);
  EXPECT_EQ(r.content_type, "text/csv");
  EXPECT_EQ(r.body.substr(0, r.body.find('\n')), "t,grid_index,e_value,action_kind,bet,continue_bet");
  const PolicyTable imported = io::import_policy(r.body, policy["sidecar"]);
  EXPECT_TRUE(imported == *service.design(id)->policy);

  ApiRequest oc = request("GET", "/designs/" + id + "/oc");
  EXPECT_EQ(api.handle(oc).status, 400);
  oc.query["theta"] = "1.5";
  EXPECT_EQ(api.handle(oc).status, 400);
  oc.query["theta"] = "abc";
  EXPECT_EQ(api.handle(oc).status, 400);
  oc.query["theta"] = "0.2";
  const Json o = body(api.handle(oc));
  EXPECT_LE(o["cumulative_rejection"].back().get<double>(), 0.05);
  EXPECT_EQ(o["cumulative_rejection"].size(), 13U);
}

TEST(Service, SessionRunsToCompletionOrAbsorption) {
  Store store(":memory:");
  SessionService service(store);
  ApiRouter api(service);
  const std::string design = body(api.handle(request("POST", "/designs", design_request("pmax"))))["design_id"];
  const auto created = api.handle(request("POST", "/sessions", {{"design_id", design}}));
  ASSERT_EQ(created.status, 201);
  const std::string id = body(created)["id"];
  EXPECT_EQ(id.rfind("s-", 0), 0U);
  EXPECT_EQ(body(created)["status"], "Open");
  EXPECT_EQ(body(created)["e_value"], 1.0);

  EXPECT_EQ(api.handle(request("POST", "/sessions/" + id + "/outcomes", {{"y", 2}})).status, 400);
  EXPECT_EQ(api.handle(request("POST", "/sessions/" + id + "/outcomes", {{"y", "1"}})).status, 400);
  EXPECT_EQ(api.handle(request("POST", "/sessions/" + id + "/override-stop")).status, 409);

  std::string status = "Open";
  int steps = 0;
  while (status == "Open") {
    const auto r = api.handle(request("POST", "/sessions/" + id + "/outcomes", {{"y", steps % 3 == 0 ? 1 : 0}}));
    ASSERT_EQ(r.status, 201) << r.body;
    const Json e = body(r);
    EXPECT_EQ(e["seq"], ++steps);
    EXPECT_LE(e["e_value"].get<double>(), e["continuous_e_value"].get<double>() * (1 + 1e-12));
    status = e["status"];
  }
  EXPECT_LE(steps, 12);
  const auto closed = api.handle(request("POST", "/sessions/" + id + "/outcomes", {{"y", 1}}));
  EXPECT_EQ(closed.status, 409);
  const Json view = body(api.handle(request("GET", "/sessions/" + id)));
  EXPECT_EQ(view["path"].size(), static_cast<std::size_t>(steps + 1));
  EXPECT_EQ(view["events"], steps);
  EXPECT_TRUE(view["recommended_action"].is_null());
}

TEST(Service, GrowSessionCompletesAtHorizon) {
  Store store(":memory:");
  SessionService service(store);
  ApiRouter api(service);
  const std::string grow = body(api.handle(request("POST", "/designs", design_request("grow", 4))))["design_id"];
  std::string id = body(api.handle(request("POST", "/sessions", {{"design_id", grow}})))["id"];
  Json last;
  for (int k = 0; k < 4; ++k) last = body(api.handle(request("POST", "/sessions/" + id + "/outcomes", {{"y", 0}})));
  EXPECT_EQ(last["status"], "Completed");
  EXPECT_EQ(last["t"], 4);
  EXPECT_EQ(last["conditional_power"], 0.0);
}

TEST(SessionEngine, AllInFromTenRejects) {
  DesignSpec spec;
  spec.n = 5;
  spec.theta0 = 0.5;
  spec.theta1 = 0.8;
  const Model model(spec, Grids{std::make_shared<const EGrid>(EGrid::build(0.05, 1000, 20)),
                                std::make_shared<const BetGrid>(BetGrid::standard())});
  const SessionEngine engine(std::make_shared<const PolicyTable>(constant_bet_policy(model, 1.0)));
  SessionState s = engine.initial();
  s.t = 3;
  s.index = model.e_grid().floor_index(10.0);
  ASSERT_EQ(engine.e_value(s), 10.0);
  SessionState up = s;
  engine.apply_outcome(up, 1);
  EXPECT_EQ(up.status, SessionStatus::RejectedEfficacy);
  EXPECT_EQ(engine.e_value(up), 20.0);
  EXPECT_EQ(engine.conditional_power(up), 1.0);
  SessionState down = s;
  engine.apply_outcome(down, 0);
  EXPECT_EQ(down.status, SessionStatus::Bankrupt);
  EXPECT_EQ(engine.zone(down), Zone::Bankrupt);
  EXPECT_THROW(engine.apply_outcome(down, 1), ApiError);
}

TEST(SessionEngine, FinalStepFromTwelveSplitsOnOutcome) {
  DesignSpec spec;
  spec.n = 4;
  spec.theta0 = 0.5;
  spec.theta1 = 0.8;
  const Model model(spec, Grids{std::make_shared<const EGrid>(EGrid::build(0.05, 1000, 20)),
                                std::make_shared<const BetGrid>(BetGrid::standard())});
  const SessionEngine engine(std::make_shared<const PolicyTable>(solve_pmax(model).policy));
  SessionState s = engine.initial();
  s.t = 3;
  s.index = model.e_grid().floor_index(12.0);
  EXPECT_EQ(engine.conditional_power(s), 0.8);
  EXPECT_EQ(engine.project(s, 1).status, SessionStatus::RejectedEfficacy);
  const SessionState down = engine.project(s, 0);
  EXPECT_TRUE(down.status == SessionStatus::Completed || down.status == SessionStatus::Bankrupt);
  EXPECT_EQ(engine.conditional_power(down), 0.0);
}

TEST(Service, WhatIfIsPureAndSatisfiesMixtureIdentity) {
  Store store(":memory:");
  SessionService service(store);
  ApiRouter api(service);
  for (const char* strategy : {"pmax", "essmin", "constrained", "grow"}) {
    const std::string design = body(api.handle(request("POST", "/designs", design_request(strategy))))["design_id"];
    const std::string id = body(api.handle(request("POST", "/sessions", {{"design_id", design}})))["id"];
    for (int y : {1, 0, 0, 1, 0, 0, 0, 1, 1, 0}) {
      const Json before = body(api.handle(request("GET", "/sessions/" + id)));
      if (before["status"] != "Open") break;
      const Json w = body(api.handle(request("GET", "/sessions/" + id + "/whatif")));
      EXPECT_NEAR(w["mixture_residual"].get<double>(), 0.0, 1e-9) << strategy << " t=" << before["t"];
      EXPECT_EQ(w["success"]["y"], 1);
      EXPECT_EQ(w["failure"]["y"], 0);
      EXPECT_EQ(body(api.handle(request("GET", "/sessions/" + id))), before);
      EXPECT_EQ(store.events(id).size(), before["events"].get<std::size_t>());
      if (w["requires_override"].get<bool>()) api.handle(request("POST", "/sessions/" + id + "/override-stop"));
      const Json e = body(api.handle(request("POST", "/sessions/" + id + "/outcomes", {{"y", y}})));
      const Json& branch = y == 1 ? w["success"] : w["failure"];
      EXPECT_EQ(e["e_value"], branch["e_value"]);
      EXPECT_EQ(e["status"], branch["status"]);
    }
  }
}

TEST(Service, OverrideAndAcceptStop) {
  Store store(":memory:");
  SessionService service(store);
  ApiRouter api(service);
  const std::string design = body(api.handle(request("POST", "/designs", design_request("constrained", 15))))["design_id"];

  const std::string a = session_at_pending_stop(api, design);
  Json view = body(api.handle(request("GET", "/sessions/" + a)));
  ASSERT_TRUE(view["stop_pending"].get<bool>()) << view.dump();
  EXPECT_EQ(view["recommended_action"]["kind"], "stop");
  EXPECT_EQ(view["recommended_action"]["binding"], false);
  EXPECT_TRUE(view.contains("stop_disclosure"));
  EXPECT_EQ(api.handle(request("POST", "/sessions/" + a + "/outcomes", {{"y", 1}})).status, 409);
  EXPECT_TRUE(body(api.handle(request("GET", "/sessions/" + a + "/whatif")))["requires_override"].get<bool>());
  const Json overridden = body(api.handle(request("POST", "/sessions/" + a + "/override-stop")));
  EXPECT_EQ(overridden["advisory_override"], true);
  EXPECT_EQ(overridden["action"]["kind"], "override_stop");
  EXPECT_EQ(api.handle(request("POST", "/sessions/" + a + "/override-stop")).status, 409);
  EXPECT_EQ(api.handle(request("POST", "/sessions/" + a + "/outcomes", {{"y", 1}})).status, 201);

  const std::string b = session_at_pending_stop(api, design);
  const Json accepted = body(api.handle(request("POST", "/sessions/" + b + "/accept-stop")));
  EXPECT_EQ(accepted["status"], "StoppedFutility");
  EXPECT_EQ(api.handle(request("POST", "/sessions/" + b + "/outcomes", {{"y", 1}})).status, 409);
  EXPECT_EQ(api.handle(request("POST", "/sessions/" + b + "/accept-stop")).status, 409);
}

TEST(Service, SessionsSurviveRestart) {
  TempDb db("restart");
  std::string design, id;
  Json before;
  {
    Store store(db.path.string());
    SessionService service(store, {EGrid::kDefaultLogSize, EGrid::kDefaultLinSize, {}, 3});
    ApiRouter api(service);
    design = body(api.handle(request("POST", "/designs", design_request("grow"))))["design_id"];
    id = body(api.handle(request("POST", "/sessions", {{"design_id", design}})))["id"];
    for (int y : {1, 0, 1, 1, 0}) api.handle(request("POST", "/sessions/" + id + "/outcomes", {{"y", y}}));
    before = body(api.handle(request("GET", "/sessions/" + id)));
    EXPECT_EQ(store.snapshot(id)->seq, 3);
  }
  {
    Store store(db.path.string());
    SessionService service(store);
    ApiRouter api(service);
    const auto again = api.handle(request("POST", "/designs", design_request("grow")));
    EXPECT_EQ(again.status, 200);
    EXPECT_EQ(body(again)["design_id"], design);
    EXPECT_EQ(body(api.handle(request("GET", "/sessions/" + id))), before);
    const SessionState replayed = service.replay(id);
    EXPECT_EQ(replayed.seq, 5);
    EXPECT_EQ(replayed.t, before["t"].get<int>());
    EXPECT_EQ(api.handle(request("POST", "/sessions/" + id + "/outcomes", {{"y", 1}})).status, 201);
    EXPECT_EQ(store.events(id).size(), 6U);
    EXPECT_EQ(store.session_count(), 1);
  }
}

TEST(Store, EventSequenceMustBeContiguous) {
  Store store(":memory:");
  store.put_design({"d", "{}", "{}", "csv", "{}"});
  EXPECT_FALSE(store.put_design({"d", "{}", "{}", "csv", "{}"}));
  store.put_session("s", "d", "now");
  store.append_event("s", 1, "{\"a\":1}");
  EXPECT_THROW(store.append_event("s", 3, "{}"), StoreError);
  EXPECT_THROW(store.append_event("s", 1, "{}"), StoreError);
  store.append_event("s", 2, "{}", std::string("snap"));
  ASSERT_EQ(store.events("s").size(), 2U);
  EXPECT_EQ(store.events("s")[0].payload, "{\"a\":1}");
  EXPECT_EQ(store.snapshot("s")->state, "snap");
  EXPECT_FALSE(store.get_session("x").has_value());
}

TEST(Service, TamperedLogIsDetectedOnReplay) {
  TempDb db("tamper");
  std::string id;
  {
    Store store(db.path.string());
    SessionService service(store);
    const std::string design = service.create_design(design_request("pmax", 6)).first["design_id"];
    id = service.create_session({{"design_id", design}})["id"];
    service.post_outcome(id, {{"y", 1}});
    Json forged = Json::parse(store.events(id)[0].payload);
    forged["e_value"] = 19.0;
    forged["seq"] = 2;
    store.append_event(id, 2, forged.dump());
  }
  Store store(db.path.string());
  SessionService service(store);
  EXPECT_THROW(service.replay(id), StoreError);
}

TEST(Http, RealServerRoundTrip) {
  Store store(":memory:");
  SessionService service(store);
  ApiRouter router(service, std::string("tok"));
  httplib::Server server;
  bind_routes(server, router);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  EXPECT_EQ(client.Post("/designs", design_request("grow", 6).dump(), "application/json")->status, 401);
  const httplib::Headers auth{{"Authorization", "Bearer tok"}};
  auto res = client.Post("/designs", auth, design_request("grow", 6).dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 201);
  const std::string design = Json::parse(res->body)["design_id"];
  res = client.Get("/designs/" + design + "/oc?theta=0.5", auth);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(Json::parse(res->body)["theta"], 0.5);
  res = client.Get("/designs/" + design + "/policy?format=csv", auth);
  EXPECT_EQ(res->get_header_value("Content-Type"), "text/csv");
  res = client.Post("/sessions", auth, Json{{"design_id", design}}.dump(), "application/json");
  EXPECT_EQ(res->status, 201);
  const std::string id = Json::parse(res->body)["id"];
  res = client.Post("/sessions/" + id + "/outcomes", auth, R"({"y": 1})", "application/json");
  EXPECT_EQ(res->status, 201);
  EXPECT_EQ(Json::parse(res->body)["t"], 1);

  server.stop();
  worker.join();
}
