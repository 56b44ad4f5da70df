#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "edesign/core/betting.hpp"
#include "edesign/io/json.hpp"
#include "edesign/oc/forward.hpp"
#include "edesign/solver/policy.hpp"

namespace edesign::service {

using io::Json;

/// Error carrying the HTTP status the API maps it to.
class ApiError : public Error {
 public:
  ApiError(int status, const std::string& message) : Error(message), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

enum class SessionStatus { Open, RejectedEfficacy, StoppedFutility, Bankrupt, Completed };

inline std::string_view to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::Open: return "Open";
    case SessionStatus::RejectedEfficacy: return "RejectedEfficacy";
    case SessionStatus::StoppedFutility: return "StoppedFutility";
    case SessionStatus::Bankrupt: return "Bankrupt";
    case SessionStatus::Completed: return "Completed";
  }
  return "unknown";
}

struct PathPoint {
  int t = 0;
  int outcome = -1;  ///< -1 at t = 0
  double bet = 0.0;  ///< bet played on this outcome
  double e_value = 1.0;
  double continuous_e_value = 1.0;
  Zone zone = Zone::Open;
};

/// Replayable state of a live trial. All fields are functions of the design,
/// the policy and the event log.
struct SessionState {
  int t = 0;
  StateIndex index = 0;
  double continuous = 1.0;
  SessionStatus status = SessionStatus::Open;
  std::vector<PathPoint> path;
  std::set<int> overridden_stops;  ///< analysis times at which an advisory Stop was overridden
  long long seq = 0;

  bool advisory_override() const { return !overridden_stops.empty(); }
};

struct Recommendation {
  enum class Kind { None, Bet, Stop } kind = Kind::None;
  double bet = 0.0;
  bool binding = false;
};

/// Pure session transition logic for one bound policy.
///
/// The discrete grid value drives actions and rejection; the continuous value
/// replays the same bets without projection. A Stop entry in the policy is an
/// advisory recommendation at analysis points that the operator either
/// overrides (play continues with the state's best bet) or accepts.
class SessionEngine {
 public:
  explicit SessionEngine(std::shared_ptr<const PolicyTable> policy)
      : policy_(std::move(policy)),
        stop_free_(std::make_shared<const PolicyTable>(policy_->without_stops())),
        schedule_(policy_->spec().schedule()) {}

  const PolicyTable& policy() const { return *policy_; }
  const DesignSpec& spec() const { return policy_->spec(); }
  const BlockSchedule& schedule() const { return schedule_; }

  SessionState initial() const {
    SessionState s;
    s.index = policy_->e_grid().one_index();
    s.path.push_back({0, -1, 0.0, 1.0, 1.0, classify_zone({0, 1.0}, spec())});
    return s;
  }

  Zone zone(const SessionState& s) const { return classify_zone({s.t, e_value(s)}, spec()); }
  double e_value(const SessionState& s) const { return policy_->e_grid()[s.index]; }

  bool stop_pending(const SessionState& s) const {
    return s.status == SessionStatus::Open && s.t < spec().n && schedule_.is_boundary(s.t) &&
           policy_->code(s.t, s.index) == PolicyTable::kStop && !s.overridden_stops.count(s.t);
  }

  Recommendation recommend(const SessionState& s) const {
    if (s.status != SessionStatus::Open) return {};
    if (stop_pending(s)) return {Recommendation::Kind::Stop, 0.0, false};
    return {Recommendation::Kind::Bet, policy_->bet_grid()[played_code(s)], false};
  }

  /// Probability under theta1 of reaching 1/alpha by n from the current state
  /// when play continues (advisory stops overridden).
  double conditional_power(const SessionState& s) const {
    switch (s.status) {
      case SessionStatus::RejectedEfficacy: return 1.0;
      case SessionStatus::Open:
        return edesign::conditional_power({s.t, e_value(s)}, *stop_free_, spec(), policy_->e_grid());
      default: return 0.0;
    }
  }

  void apply_outcome(SessionState& s, int y) const {
    require_open(s);
    if (y != 0 && y != 1) throw ApiError(400, "outcome must be 0 or 1");
    if (stop_pending(s))
      throw ApiError(409, "a futility stop is recommended at t=" + std::to_string(s.t) +
                              "; override or accept it before entering outcomes");
    step(s, y);
    ++s.seq;
  }

  /// Outcome branch without the pending-stop check (what-if projections).
  SessionState project(const SessionState& s, int y) const {
    require_open(s);
    SessionState copy = s;
    step(copy, y);
    return copy;
  }

  void override_stop(SessionState& s) const {
    require_open(s);
    if (!stop_pending(s)) throw ApiError(409, "no futility stop is pending");
    s.overridden_stops.insert(s.t);
    ++s.seq;
  }

  void accept_stop(SessionState& s) const {
    require_open(s);
    if (!stop_pending(s)) throw ApiError(409, "no futility stop is pending");
    s.status = SessionStatus::StoppedFutility;
    ++s.seq;
  }

 private:
  static void require_open(const SessionState& s) {
    if (s.status != SessionStatus::Open)
      throw ApiError(409, "session is " + std::string(to_string(s.status)));
  }

  BetIndex played_code(const SessionState& s) const {
    const BetIndex c = policy_->code(s.t, s.index);
    return c == PolicyTable::kStop ? policy_->continuation_code(s.t, s.index) : c;
  }

  void step(SessionState& s, int y) const {
    const BetIndex code = played_code(s);
    const double bet = policy_->bet_grid()[code];
    const auto& kernel = policy_->model().kernel();
    const EGrid& grid = policy_->e_grid();
    s.index = y == 1 ? kernel.up(s.index, code) : kernel.down(s.index, code);
    s.continuous = capital_update(s.continuous, bet, y, spec().theta0);
    s.t += 1;
    const Zone z = zone(s);
    s.path.push_back({s.t, y, bet, grid[s.index], s.continuous, z});
    if (z == Zone::Rejected)
      s.status = SessionStatus::RejectedEfficacy;
    else if (z == Zone::Bankrupt)
      s.status = SessionStatus::Bankrupt;
    else if (s.t == spec().n)
      s.status = SessionStatus::Completed;
    else if (z == Zone::Hopeless && policy_->futility_from_hopeless && schedule_.is_boundary(s.t))
      s.status = SessionStatus::StoppedFutility;
  }

  std::shared_ptr<const PolicyTable> policy_;
  std::shared_ptr<const PolicyTable> stop_free_;
  BlockSchedule schedule_;
};

inline Json to_json(const PathPoint& p) {
  Json j = {{"t", p.t},
            {"bet", p.bet},
            {"e_value", p.e_value},
            {"continuous_e_value", p.continuous_e_value},
            {"zone", std::string(to_string(p.zone))}};
  j["outcome"] = p.outcome < 0 ? Json(nullptr) : Json(p.outcome);
  return j;
}

inline Json recommendation_json(const Recommendation& r) {
  switch (r.kind) {
    case Recommendation::Kind::None: return nullptr;
    case Recommendation::Kind::Stop: return {{"kind", "stop"}, {"binding", false}};
    case Recommendation::Kind::Bet: return {{"kind", "bet"}, {"bet", r.bet}};
  }
  return nullptr;
}

/// State fields shared by session snapshots, events and what-if branches.
inline Json state_json(const SessionEngine& engine, const SessionState& s) {
  return Json{{"t", s.t},
              {"grid_index", s.index},
              {"e_value", engine.e_value(s)},
              {"continuous_e_value", s.continuous},
              {"zone", std::string(to_string(engine.zone(s)))},
              {"status", std::string(to_string(s.status))},
              {"conditional_power", engine.conditional_power(s)},
              {"recommended_action", recommendation_json(engine.recommend(s))},
              {"advisory_override", s.advisory_override()}};
}

}  // namespace edesign::service
