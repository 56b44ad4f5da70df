#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "edesign/core/design.hpp"
#include "edesign/core/errors.hpp"

namespace edesign {

/// Reward family of the betting MDP.
///
///  - PMax: 1 at the horizon if 1/alpha was reached, 0 otherwise.
///  - ESSMin: -1 for every time t <= n at which 1/alpha has not been reached.
///  - Constrained(lambda): -1 per recruited participant, lambda on reaching
///    1/alpha; Stop ends the trial with no further reward.
///  - Blocked variants charge the whole next block at block boundaries only,
///    and (constrained) allow Stop only there.
struct RewardSpec {
  enum class Kind { PMax, ESSMin, Constrained, BlockedESSMin, BlockedConstrained };

  Kind kind = Kind::PMax;
  double lambda = 0.0;
  std::optional<BlockSchedule> schedule;

  static RewardSpec pmax() { return {Kind::PMax, 0.0, std::nullopt}; }
  static RewardSpec essmin() { return {Kind::ESSMin, 0.0, std::nullopt}; }
  static RewardSpec constrained(double lambda) { return {Kind::Constrained, lambda, std::nullopt}; }
  static RewardSpec blocked_essmin(BlockSchedule s) { return {Kind::BlockedESSMin, 0.0, std::move(s)}; }
  static RewardSpec blocked_constrained(double lambda, BlockSchedule s) {
    return {Kind::BlockedConstrained, lambda, std::move(s)};
  }

  bool is_blocked() const { return kind == Kind::BlockedESSMin || kind == Kind::BlockedConstrained; }
  bool is_constrained() const { return kind == Kind::Constrained || kind == Kind::BlockedConstrained; }
  bool is_essmin() const { return kind == Kind::ESSMin || kind == Kind::BlockedESSMin; }
  bool allows_stop() const { return is_constrained(); }

  void validate(const DesignSpec& spec) const {
    require(lambda >= 0.0, "lambda must be nonnegative");
    if (is_blocked()) {
      require(schedule.has_value(), "blocked rewards require a block schedule");
      require(schedule->total() == spec.n, "block schedule must sum to n");
    } else {
      require(!schedule.has_value(), "unblocked rewards must not carry a block schedule");
    }
  }

  /// Recruitment cost charged for a live state at time t that continues (t < n).
  double recruit_cost(int t) const {
    if (!is_blocked()) return (kind == Kind::PMax) ? 0.0 : 1.0;
    return static_cast<double>(schedule->next_block_size(t));
  }

  bool stop_allowed_at(int t) const {
    if (!allows_stop()) return false;
    return !is_blocked() || schedule->is_boundary(t);
  }
};

inline std::string_view to_string(RewardSpec::Kind k) {
  switch (k) {
    case RewardSpec::Kind::PMax: return "pmax";
    case RewardSpec::Kind::ESSMin: return "essmin";
    case RewardSpec::Kind::Constrained: return "constrained";
    case RewardSpec::Kind::BlockedESSMin: return "blocked_essmin";
    case RewardSpec::Kind::BlockedConstrained: return "blocked_constrained";
  }
  return "unknown";
}

inline RewardSpec::Kind reward_kind_from_string(std::string_view s) {
  if (s == "pmax") return RewardSpec::Kind::PMax;
  if (s == "essmin") return RewardSpec::Kind::ESSMin;
  if (s == "constrained") return RewardSpec::Kind::Constrained;
  if (s == "blocked_essmin") return RewardSpec::Kind::BlockedESSMin;
  if (s == "blocked_constrained") return RewardSpec::Kind::BlockedConstrained;
  throw InvalidArgument("unknown reward kind '" + std::string(s) + "'");
}

}  // namespace edesign
