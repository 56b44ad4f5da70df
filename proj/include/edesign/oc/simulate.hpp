#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "edesign/core/betting.hpp"
#include "edesign/solver/policy.hpp"

namespace edesign {

enum class StopReason { None, Efficacy, Futility, Hopeless, Bankrupt, Horizon };

inline std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::None: return "none";
    case StopReason::Efficacy: return "efficacy";
    case StopReason::Futility: return "futility";
    case StopReason::Hopeless: return "hopeless";
    case StopReason::Bankrupt: return "bankrupt";
    case StopReason::Horizon: return "horizon";
  }
  return "unknown";
}

/// Uniform draws in [0, 1) from mt19937_64 using the top 53 bits, so a seed
/// yields the same stream on every platform. Outcome t is 1 iff u_t < theta.
class OutcomeStream {
 public:
  explicit OutcomeStream(std::uint64_t seed) : engine_(seed) {}

  double next_uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  int next_outcome(double theta) { return next_uniform() < theta ? 1 : 0; }

  static std::vector<int> outcomes(std::uint64_t seed, int n, double theta) {
    OutcomeStream s(seed);
    std::vector<int> out(n);
    for (int& y : out) y = s.next_outcome(theta);
    return out;
  }

 private:
  std::mt19937_64 engine_;
};

struct SimulatedPath {
  /// Continuous capital under the policy's bets (evalues[0] = 1).
  EProcessPath continuous;
  /// Grid e-value that drives actions and rejection.
  std::vector<double> discrete{1.0};
  std::vector<Zone> zones;
  StopReason stop_reason = StopReason::None;
  int stop_time = 0;
};

/// Replays a fixed outcome sequence through the policy until efficacy, Stop,
/// bankruptcy, hopeless-zone entry (for horizon-aware designs) or the horizon.
inline SimulatedPath replay_policy(const PolicyTable& policy, std::span<const int> outcomes) {
  const DesignSpec& spec = policy.spec();
  const EGrid& grid = policy.e_grid();
  const BlockSchedule schedule = spec.schedule();
  require(static_cast<int>(outcomes.size()) >= spec.n, "need one outcome per participant");
  SimulatedPath path;
  StateIndex idx = grid.one_index();
  path.zones.push_back(classify_zone({0, 1.0}, spec));
  for (int t = 0;; ++t) {
    const Zone z = path.zones.back();
    path.stop_time = t;
    if (z == Zone::Rejected) {
      path.stop_reason = StopReason::Efficacy;
      break;
    }
    if (z == Zone::Bankrupt) {
      path.stop_reason = StopReason::Bankrupt;
      break;
    }
    if (t == spec.n) {
      path.stop_reason = StopReason::Horizon;
      break;
    }
    const bool boundary = schedule.is_boundary(t);
    if (boundary && policy.futility_from_hopeless && z == Zone::Hopeless) {
      path.stop_reason = StopReason::Hopeless;
      break;
    }
    BetIndex code = policy.code(t, idx);
    if (code == PolicyTable::kStop) {
      if (boundary) {
        path.stop_reason = StopReason::Futility;
        break;
      }
      code = policy.continuation_code(t, idx);
    }
    const double bet = policy.bet_grid()[code];
    const int y = outcomes[t];
    path.continuous.outcomes.push_back(y);
    path.continuous.bets.push_back(bet);
    path.continuous.evalues.push_back(capital_update(path.continuous.evalues.back(), bet, y, spec.theta0));
    path.continuous.successes.push_back(path.continuous.successes.back() + y);
    const auto& kernel = policy.model().kernel();
    idx = y == 1 ? kernel.up(idx, code) : kernel.down(idx, code);
    path.discrete.push_back(grid[idx]);
    path.zones.push_back(classify_zone({t + 1, grid[idx]}, spec));
  }
  return path;
}

/// Seeded sample path: outcomes drawn from OutcomeStream(seed) with success
/// probability theta_true, so equal seeds share outcomes across policies.
inline SimulatedPath simulate_path(const PolicyTable& policy, double theta_true, std::uint64_t seed) {
  require(theta_true >= 0.0 && theta_true <= 1.0, "theta_true must lie in [0, 1]");
  return replay_policy(policy, OutcomeStream::outcomes(seed, policy.n(), theta_true));
}

}  // namespace edesign
