#pragma once

#include <chrono>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>

#include "edesign/io/hash.hpp"
#include "edesign/io/json.hpp"
#include "edesign/io/oc_io.hpp"
#include "edesign/io/policy_io.hpp"
#include "edesign/service/session.hpp"
#include "edesign/service/store.hpp"
#include "edesign/solver/strategy.hpp"

namespace edesign::service {

inline constexpr int kApiSchemaVersion = 1;

struct ServiceOptions {
  int grid_size_log = EGrid::kDefaultLogSize;
  int grid_size_lin = EGrid::kDefaultLinSize;
  ConstrainedOptions newton;
  /// A snapshot is stored with every k-th event.
  int snapshot_every = 10;
};

/// Solved design held in memory: policy plus its solve summary.
struct DesignEntry {
  std::string id;
  Json request;
  Json summary;
  std::shared_ptr<const PolicyTable> policy;
};

/// Session facade over the solvers, the event store and the session engine.
class SessionService {
 public:
  explicit SessionService(Store& store, ServiceOptions options = {}) : store_(store), options_(options) {}

  /// Solves (or returns the cached) design for a request
  /// {spec: {...}, strategy: "...", schedule?: [...] | "KxS"}.
  /// Returns the summary and whether it was newly created.
  std::pair<Json, bool> create_design(const Json& body) {
    const auto [id, request] = canonical_request(body);
    std::shared_future<std::shared_ptr<const DesignEntry>> pending;
    std::promise<std::shared_ptr<const DesignEntry>> promise;
    bool owner = false;
    {
      std::lock_guard lock(mutex_);
      if (auto it = designs_.find(id); it != designs_.end()) return {it->second->summary, false};
      if (auto it = inflight_.find(id); it != inflight_.end()) {
        pending = it->second;
      } else {
        pending = promise.get_future().share();
        inflight_.emplace(id, pending);
        owner = true;
      }
    }
    if (!owner) return {pending.get()->summary, false};

    bool created = false;
    try {
      std::shared_ptr<const DesignEntry> entry = load_design(id);
      if (!entry) {
        entry = solve_design(id, request);
        created = store_.put_design({id, request.dump(), entry->summary.dump(), io::policy_csv(*entry->policy),
                                     io::policy_sidecar(*entry->policy).dump()});
      }
      {
        std::lock_guard lock(mutex_);
        designs_[id] = entry;
        inflight_.erase(id);
      }
      promise.set_value(entry);
      return {entry->summary, created};
    } catch (...) {
      {
        std::lock_guard lock(mutex_);
        inflight_.erase(id);
      }
      promise.set_exception(std::current_exception());
      throw;
    }
  }

  std::shared_ptr<const DesignEntry> design(const std::string& id) {
    {
      std::lock_guard lock(mutex_);
      if (auto it = designs_.find(id); it != designs_.end()) return it->second;
    }
    auto entry = load_design(id);
    if (!entry) throw ApiError(404, "unknown design '" + id + "'");
    std::lock_guard lock(mutex_);
    return designs_.emplace(id, entry).first->second;
  }

  Json design_view(const std::string& id) { return design(id)->summary; }

  /// Policy table in compact form: per stage, one action code per e-grid index
  /// (-1 = Stop, otherwise an index into bet_grid).
  Json policy_view(const std::string& id) {
    const auto entry = design(id);
    const PolicyTable& p = *entry->policy;
    Json actions = Json::array();
    Json continuation = Json::array();
    for (int t = p.first_stage(); t < p.n(); ++t) {
      std::vector<int> row, cont;
      row.reserve(p.states());
      for (StateIndex i = 0; i < static_cast<StateIndex>(p.states()); ++i) {
        row.push_back(p.code(t, i));
        cont.push_back(p.continuation_code(t, i));
      }
      actions.push_back(std::move(row));
      continuation.push_back(std::move(cont));
    }
    Json zones = Json::array();
    for (int t = 0; t <= p.n(); ++t) {
      const int remaining = p.n() - t;
      zones.push_back({{"t", t},
                       {"hopeless_edge", hopeless_edge(remaining, p.spec().alpha, p.spec().theta0)},
                       {"almost_hopeless_edge", remaining > 0
                                                    ? hopeless_edge(remaining - 1, p.spec().alpha, p.spec().theta0)
                                                    : p.spec().threshold()}});
    }
    const DiagnosticBounds bounds = diagnostic_bounds(p.spec());
    return Json{{"schema_version", kApiSchemaVersion},
                {"design_id", id},
                {"sidecar", io::policy_sidecar(p)},
                {"e_grid", p.e_grid().values()},
                {"bet_grid", p.bet_grid().values()},
                {"actions", actions},
                {"continue_actions", continuation},
                {"zone_edges", zones},
                {"bounds", {{"m_upper", bounds.m_upper}, {"m_lower", bounds.m_lower}}}};
  }

  std::string policy_csv(const std::string& id) { return io::policy_csv(*design(id)->policy); }

  Json oc_view(const std::string& id, double theta) {
    if (!(theta >= 0.0 && theta <= 1.0)) throw ApiError(400, "theta must lie in [0, 1]");
    const auto entry = design(id);
    const OCProfile oc = forward_oc(*entry->policy, theta);
    return Json{{"schema_version", kApiSchemaVersion},
                {"design_id", id},
                {"theta", theta},
                {"cumulative_rejection", oc.cumulative_rejection},
                {"cumulative_futility", oc.cumulative_futility},
                {"almost_hopeless_mass", oc.almost_hopeless_mass},
                {"ess", oc.ess},
                {"analysis_points", oc.analysis_points}};
  }

  Json create_session(const Json& body) {
    if (!body.is_object() || !body.contains("design_id") || !body["design_id"].is_string())
      throw ApiError(400, "design_id: expected a string");
    const std::string design_id = body["design_id"].get<std::string>();
    const auto entry = design(design_id);
    std::string id;
    {
      std::lock_guard lock(mutex_);
      id = "s-" + random_hex(16);
    }
    store_.put_session(id, design_id, now_iso());
    auto slot = std::make_shared<Slot>(entry);
    {
      std::lock_guard lock(mutex_);
      sessions_[id] = slot;
    }
    std::lock_guard lock(slot->mutex);
    return session_json(id, *slot);
  }

  Json session_view(const std::string& id) {
    auto slot = session(id);
    std::lock_guard lock(slot->mutex);
    return session_json(id, *slot);
  }

  /// Appends an outcome; returns the persisted event.
  Json post_outcome(const std::string& id, const Json& body) {
    if (!body.is_object() || !body.contains("y")) throw ApiError(400, "y: required field is missing");
    const Json& y = body["y"];
    if (!y.is_number_integer() || (y.get<long long>() != 0 && y.get<long long>() != 1))
      throw ApiError(400, "y: outcome must be 0 or 1");
    auto slot = session(id);
    std::lock_guard lock(slot->mutex);
    SessionState next = slot->state;
    slot->engine.apply_outcome(next, static_cast<int>(y.get<long long>()));
    return commit(id, *slot, std::move(next), {{"kind", "outcome"}, {"y", y.get<int>()}});
  }

  Json override_stop(const std::string& id) {
    auto slot = session(id);
    std::lock_guard lock(slot->mutex);
    SessionState next = slot->state;
    slot->engine.override_stop(next);
    return commit(id, *slot, std::move(next), {{"kind", "override_stop"}});
  }

  Json accept_stop(const std::string& id) {
    auto slot = session(id);
    std::lock_guard lock(slot->mutex);
    SessionState next = slot->state;
    slot->engine.accept_stop(next);
    return commit(id, *slot, std::move(next), {{"kind", "accept_stop"}});
  }

  /// Projected next states for y = 1 and y = 0; never mutates the session.
  Json whatif(const std::string& id) {
    auto slot = session(id);
    std::lock_guard lock(slot->mutex);
    const SessionEngine& engine = slot->engine;
    const SessionState& s = slot->state;
    const double theta1 = engine.spec().theta1;
    const SessionState up = engine.project(s, 1);
    const SessionState down = engine.project(s, 0);
    const double cp = engine.conditional_power(s);
    const double cp_up = engine.conditional_power(up);
    const double cp_down = engine.conditional_power(down);
    Json branch_up = state_json(engine, up);
    branch_up["y"] = 1;
    branch_up["bet"] = up.path.back().bet;
    Json branch_down = state_json(engine, down);
    branch_down["y"] = 0;
    branch_down["bet"] = down.path.back().bet;
    return Json{{"schema_version", kApiSchemaVersion},
                {"session_id", id},
                {"t", s.t},
                {"conditional_power", cp},
                {"requires_override", engine.stop_pending(s)},
                {"success", branch_up},
                {"failure", branch_down},
                {"mixture_residual", theta1 * cp_up + (1.0 - theta1) * cp_down - cp}};
  }

  /// Session rebuilt purely from the stored event log (what a restart sees).
  SessionState replay(const std::string& id) {
    const auto meta = store_.get_session(id);
    if (!meta) throw ApiError(404, "unknown session '" + id + "'");
    return rebuild(id, SessionEngine(design(meta->first)->policy)).state;
  }

 private:
  struct Slot {
    explicit Slot(std::shared_ptr<const DesignEntry> d) : design(std::move(d)), engine(design->policy) {
      state = engine.initial();
    }
    std::shared_ptr<const DesignEntry> design;
    SessionEngine engine;
    SessionState state;
    std::vector<Json> events;
    std::mutex mutex;
  };

  struct Rebuilt {
    SessionState state;
    std::vector<Json> events;
  };

  Json event_json(const std::string& id, const Slot& slot, const SessionState& s, const Json& input,
                  const std::string& timestamp) const {
    Json e = state_json(slot.engine, s);
    e["schema_version"] = kApiSchemaVersion;
    e["session_id"] = id;
    e["seq"] = s.seq;
    e["input"] = input;
    e["timestamp"] = timestamp;
    if (input["kind"] == "outcome") {
      e["outcome"] = s.path.back().outcome;
      e["action"] = {{"kind", "bet"}, {"bet", s.path.back().bet}};
    } else {
      e["outcome"] = nullptr;
      e["action"] = {{"kind", input["kind"]}};
    }
    return e;
  }

  Json commit(const std::string& id, Slot& slot, SessionState next, const Json& input) {
    const Json event = event_json(id, slot, next, input, now_iso());
    std::optional<std::string> snapshot;
    if (next.seq % options_.snapshot_every == 0 || next.status != SessionStatus::Open)
      snapshot = snapshot_json(slot.engine, next).dump();
    store_.append_event(id, next.seq, event.dump(), snapshot);
    slot.state = std::move(next);
    slot.events.push_back(event);
    return event;
  }

  static Json snapshot_json(const SessionEngine& engine, const SessionState& s) {
    Json path = Json::array();
    for (const auto& p : s.path) path.push_back(to_json(p));
    Json j = state_json(engine, s);
    j["seq"] = s.seq;
    j["path"] = path;
    j["overridden_stops"] = s.overridden_stops;
    return j;
  }

  /// Replays the stored inputs; every stored event's derived fields and every
  /// snapshot must match the replay.
  Rebuilt rebuild(const std::string& id, const SessionEngine& engine) {
    Rebuilt out{engine.initial(), {}};
    const auto snapshot = store_.snapshot(id);
    for (const auto& rec : store_.events(id)) {
      Json stored = Json::parse(rec.payload);
      const Json& input = stored.at("input");
      const std::string kind = input.at("kind").get<std::string>();
      if (kind == "outcome")
        engine.apply_outcome(out.state, input.at("y").get<int>());
      else if (kind == "override_stop")
        engine.override_stop(out.state);
      else if (kind == "accept_stop")
        engine.accept_stop(out.state);
      else
        throw StoreError("unknown event kind '" + kind + "'");
      if (out.state.seq != rec.seq) throw StoreError("event log for " + id + " is not contiguous");
      const Json derived = state_json(engine, out.state);
      for (const auto& [k, v] : derived.items())
        if (stored.at(k) != v) throw StoreError("replay of " + id + " diverges at seq " + std::to_string(rec.seq));
      if (snapshot && snapshot->seq == rec.seq && Json::parse(snapshot->state) != snapshot_json(engine, out.state))
        throw StoreError("snapshot of " + id + " does not match its event log");
      out.events.push_back(std::move(stored));
    }
    return out;
  }

  std::shared_ptr<Slot> session(const std::string& id) {
    {
      std::lock_guard lock(mutex_);
      if (auto it = sessions_.find(id); it != sessions_.end()) return it->second;
    }
    const auto meta = store_.get_session(id);
    if (!meta) throw ApiError(404, "unknown session '" + id + "'");
    auto slot = std::make_shared<Slot>(design(meta->first));
    auto rebuilt = rebuild(id, slot->engine);
    slot->state = std::move(rebuilt.state);
    slot->events = std::move(rebuilt.events);
    std::lock_guard lock(mutex_);
    return sessions_.emplace(id, slot).first->second;
  }

  Json session_json(const std::string& id, const Slot& slot) const {
    const SessionEngine& engine = slot.engine;
    const SessionState& s = slot.state;
    Json j = snapshot_json(engine, s);
    j["schema_version"] = kApiSchemaVersion;
    j["id"] = id;
    j["design_id"] = slot.design->id;
    j["strategy"] = engine.policy().strategy;
    j["n"] = engine.spec().n;
    j["threshold"] = engine.spec().threshold();
    j["stop_pending"] = engine.stop_pending(s);
    const BlockSchedule& schedule = engine.schedule();
    j["block"] = {{"at_analysis", s.t <= engine.spec().n && schedule.is_boundary(s.t)},
                  {"next_analysis", s.t < engine.spec().n ? schedule.block_end(s.t + 1) : engine.spec().n}};
    j["events"] = static_cast<long long>(slot.events.size());
    if (engine.policy().has_stops())
      j["stop_disclosure"] =
          "Futility stops in this design are advisory: continuing after a recommended stop leaves the "
          "efficacy rule, and hence the type I error guarantee, unchanged.";
    return j;
  }

  std::pair<std::string, Json> canonical_request(const Json& body) const {
    if (!body.is_object()) throw ApiError(422, "request body must be a JSON object");
    try {
      DesignSpec spec = io::design_from_json(body.contains("spec") ? body["spec"] : Json(), "spec");
      if (spec.blocks) throw io::ConfigError("spec.blocks", "use the top-level 'schedule' field");
      if (const auto it = body.find("schedule"); it != body.end() && !it->is_null()) {
        BlockSchedule s = io::schedule_from_json(*it, spec.n, "schedule");
        if (!s.is_fully_sequential()) spec.blocks = s;
      }
      if (!body.contains("strategy") || !body["strategy"].is_string())
        throw io::ConfigError("strategy", "expected one of pmax, essmin, constrained, grow");
      const Strategy strategy = strategy_from_string(body["strategy"].get<std::string>());
      Json request = {{"spec", io::to_json(spec)},
                      {"strategy", std::string(to_string(strategy))},
                      {"grid", {{"size_log", options_.grid_size_log}, {"size_lin", options_.grid_size_lin}}},
                      {"newton",
                       {{"eps", options_.newton.eps_newton}, {"max_iterations", options_.newton.max_iterations}}}};
      return {io::sha256_hex(request.dump()).substr(0, 32), request};
    } catch (const ApiError&) {
      throw;
    } catch (const InvalidArgument& e) {
      throw ApiError(422, e.what());
    }
  }

  std::shared_ptr<const DesignEntry> solve_design(const std::string& id, const Json& request) const {
    const DesignSpec spec = io::design_from_json(request["spec"], "spec");
    const Strategy strategy = strategy_from_string(request["strategy"].get<std::string>());
    Model model(spec, Grids{std::make_shared<const EGrid>(
                                EGrid::build(spec.alpha, options_.grid_size_log, options_.grid_size_lin)),
                            std::make_shared<const BetGrid>(BetGrid::standard())});
    StrategySolution solution = solve_strategy(model, strategy, options_.newton);
    auto policy = std::make_shared<const PolicyTable>(std::move(solution.policy));
    const OCProfile h1 = forward_oc(*policy, spec.theta1);
    const OCProfile h0 = forward_oc(*policy, spec.theta0);
    Json summary = {{"schema_version", kApiSchemaVersion},
                    {"design_id", id},
                    {"strategy", request["strategy"]},
                    {"spec", request["spec"]},
                    {"schedule", spec.schedule().label()},
                    {"final_power", h1.final_rejection()},
                    {"final_size", h0.final_rejection()},
                    {"ess_theta1", h1.ess},
                    {"ess_theta0", h0.ess},
                    {"initial_bet", policy->action(0, policy->e_grid().one_index()).bet}};
    if (solution.trace) {
      Json trace = Json::array();
      for (const auto& it : solution.trace->iterations)
        trace.push_back({{"lambda", it.lambda}, {"power", it.power}, {"ess", it.ess}});
      summary["lambda"] = solution.trace->final_lambda;
      summary["lambda_trace"] = trace;
    }
    return std::make_shared<const DesignEntry>(DesignEntry{id, request, summary, policy});
  }

  std::shared_ptr<const DesignEntry> load_design(const std::string& id) const {
    const auto rec = store_.get_design(id);
    if (!rec) return nullptr;
    auto policy = std::make_shared<const PolicyTable>(io::import_policy(rec->policy_csv, Json::parse(rec->policy_json)));
    return std::make_shared<const DesignEntry>(
        DesignEntry{id, Json::parse(rec->request), Json::parse(rec->summary), std::move(policy)});
  }

  std::string random_hex(int digits) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (int i = 0; i < digits; ++i) out += kHex[rng_() & 0xF];
    return out;
  }

  static std::string now_iso() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

  Store& store_;
  ServiceOptions options_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const DesignEntry>> designs_;
  std::map<std::string, std::shared_future<std::shared_ptr<const DesignEntry>>> inflight_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::mt19937_64 rng_{std::random_device{}()};
};

}  // namespace edesign::service
