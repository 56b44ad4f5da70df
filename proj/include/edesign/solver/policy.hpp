#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "edesign/core/betting.hpp"
#include "edesign/core/design.hpp"
#include "edesign/grid/grid.hpp"
#include "edesign/solver/rewards.hpp"

namespace edesign {

/// Design plus grids plus the precomputed transition table built from them.
class Model {
 public:
  Model(DesignSpec spec, Grids grids) : spec_(std::move(spec)), grids_(std::move(grids)) {
    spec_.validate();
    require(grids_.e && grids_.bets, "model requires both grids");
    require(grids_.e->alpha() == spec_.alpha, "e-grid was built for a different alpha");
    kernel_ = std::make_shared<const TransitionTable>(*grids_.e, *grids_.bets, spec_.theta0);
  }

  static Model standard(const DesignSpec& spec) { return Model(spec, Grids::standard(spec.alpha)); }

  const DesignSpec& spec() const { return spec_; }
  const Grids& grids() const { return grids_; }
  const EGrid& e_grid() const { return *grids_.e; }
  const BetGrid& bet_grid() const { return *grids_.bets; }
  const TransitionTable& kernel() const { return *kernel_; }

  /// Same grids and kernel, different block schedule (or other non-kernel fields).
  Model with_spec(DesignSpec spec) const {
    require(spec.n == spec_.n && spec.theta0 == spec_.theta0 && spec.alpha == spec_.alpha,
            "respecified model must keep n, theta0 and alpha");
    spec.validate();
    Model copy = *this;
    copy.spec_ = std::move(spec);
    return copy;
  }

 private:
  DesignSpec spec_;
  Grids grids_;
  std::shared_ptr<const TransitionTable> kernel_;
};

/// Solved strategy: action per (t, e-grid index) for t in [first_stage, n).
///
/// Actions are stored as bet-grid indices, with kStop for the futility
/// action. Constrained policies additionally keep, per state, the best bet
/// among bets only, which is what a monitored trial uses when an advisory
/// stop is overridden.
class PolicyTable {
 public:
  static constexpr BetIndex kStop = -1;

  PolicyTable(Model model, RewardSpec rewards, int first_stage = 0)
      : model_(std::move(model)),
        rewards_(std::move(rewards)),
        first_stage_(first_stage),
        codes_(static_cast<std::size_t>(model_.spec().n) * model_.e_grid().size(), zero_bet()),
        continuation_(codes_) {
    require(first_stage >= 0 && first_stage <= model_.spec().n, "first stage out of range");
  }

  const Model& model() const { return model_; }
  const DesignSpec& spec() const { return model_.spec(); }
  const EGrid& e_grid() const { return model_.e_grid(); }
  const BetGrid& bet_grid() const { return model_.bet_grid(); }
  const RewardSpec& rewards() const { return rewards_; }
  int n() const { return model_.spec().n; }
  int first_stage() const { return first_stage_; }
  std::size_t states() const { return model_.e_grid().size(); }

  BetIndex code(int t, StateIndex i) const { return codes_[slot(t, i)]; }
  BetIndex continuation_code(int t, StateIndex i) const { return continuation_[slot(t, i)]; }

  void set(int t, StateIndex i, BetIndex code) {
    require(code == kStop || (code >= 0 && static_cast<std::size_t>(code) < bet_grid().size()),
            "action code out of range");
    codes_[slot(t, i)] = code;
    if (code != kStop) continuation_[slot(t, i)] = code;
  }

  void set_continuation(int t, StateIndex i, BetIndex code) {
    require(code >= 0 && static_cast<std::size_t>(code) < bet_grid().size(), "continuation must be a bet");
    continuation_[slot(t, i)] = code;
  }

  Action action(int t, StateIndex i) const {
    const BetIndex c = code(t, i);
    return c == kStop ? Action::stop() : Action{Action::Kind::Bet, bet_grid()[c]};
  }

  double continuation_bet(int t, StateIndex i) const { return bet_grid()[continuation_code(t, i)]; }

  bool has_stops() const {
    for (BetIndex c : codes_)
      if (c == kStop) return true;
    return false;
  }

  /// Copy in which every Stop is replaced by the state's continuation bet.
  PolicyTable without_stops() const {
    PolicyTable copy = *this;
    copy.codes_ = continuation_;
    return copy;
  }

  /// Human-readable strategy name ("pmax", "grow", ...).
  std::string strategy;
  /// Whether the operating characteristics treat hopeless-zone entry as futility stopping.
  bool futility_from_hopeless = true;
  /// Solve diagnostics exported in the policy sidecar.
  std::map<std::string, double> diagnostics;

  friend bool operator==(const PolicyTable& a, const PolicyTable& b) {
    return a.first_stage_ == b.first_stage_ && a.codes_ == b.codes_ && a.continuation_ == b.continuation_ &&
           a.e_grid() == b.e_grid() && a.bet_grid() == b.bet_grid();
  }

  std::span<const BetIndex> codes() const { return codes_; }

 private:
  BetIndex zero_bet() const { return 0; }

  std::size_t slot(int t, StateIndex i) const {
    require(t >= first_stage_ && t < n(), "policy stage out of range");
    return static_cast<std::size_t>(t) * states() + static_cast<std::size_t>(i);
  }

  Model model_;
  RewardSpec rewards_;
  int first_stage_ = 0;
  std::vector<BetIndex> codes_;
  std::vector<BetIndex> continuation_;
};

/// Expected reward-to-go per (t, e-grid index) for t in [first_stage, n].
class ValueTable {
 public:
  ValueTable(int n, std::size_t states, int first_stage = 0)
      : n_(n), states_(states), first_stage_(first_stage),
        values_(static_cast<std::size_t>(n + 1) * states, 0.0) {}

  double operator()(int t, StateIndex i) const { return values_[slot(t, i)]; }
  double& operator()(int t, StateIndex i) { return values_[slot(t, i)]; }

  std::span<const double> stage(int t) const {
    return std::span<const double>(values_).subspan(slot(t, 0), states_);
  }
  std::span<double> stage(int t) { return std::span<double>(values_).subspan(slot(t, 0), states_); }

  int n() const { return n_; }
  int first_stage() const { return first_stage_; }
  std::size_t states() const { return states_; }

 private:
  std::size_t slot(int t, StateIndex i) const {
    require(t >= first_stage_ && t <= n_, "value stage out of range");
    return static_cast<std::size_t>(t) * states_ + static_cast<std::size_t>(i);
  }

  int n_;
  std::size_t states_;
  int first_stage_;
  std::vector<double> values_;
};

}  // namespace edesign
