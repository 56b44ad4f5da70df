#pragma once

// Discretization of the e-space and the bet space, floor projection, and the
// discrete transition rule of the e-state chain.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "edesign/core/design.hpp"
#include "edesign/core/errors.hpp"

namespace edesign {

using StateIndex = std::int32_t;
using BetIndex = std::int16_t;

/// Sorted set of representable e-values: 0, a geometric range below 1, and a
/// linear range from 1 to 1/alpha. 0, 1 and 1/alpha are exact members.
class EGrid {
 public:
  static constexpr int kDefaultLogSize = 1000;
  static constexpr int kDefaultLinSize = 1000;
  static constexpr double kSmallestPositive = 1e-5;

  static EGrid build(double alpha, int size_log = kDefaultLogSize, int size_lin = kDefaultLinSize) {
    require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    require(size_log > 0 && size_lin > 0, "grid sizes must be positive");
    const double top = 1.0 / alpha;
    const double below_one = 1.0 - 2.0 * std::numeric_limits<double>::epsilon();
    std::vector<double> v;
    v.reserve(1 + size_log + size_lin);
    v.push_back(0.0);
    if (size_log == 1) {
      v.push_back(kSmallestPositive);
    } else {
      const double lo = std::log(kSmallestPositive);
      const double hi = std::log(below_one);
      for (int i = 0; i < size_log; ++i) v.push_back(std::exp(lo + (hi - lo) * i / (size_log - 1)));
      v[1] = kSmallestPositive;
      v.back() = below_one;
    }
    if (size_lin == 1) {
      v.push_back(1.0);
      v.push_back(top);
    } else {
      for (int i = 0; i < size_lin; ++i) v.push_back(1.0 + (top - 1.0) * i / (size_lin - 1));
      v[v.size() - size_lin] = 1.0;
      v.back() = top;
    }
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return EGrid(std::move(v), alpha, size_log, size_lin);
  }

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

  double alpha() const { return alpha_; }
  double cap() const { return values_.back(); }
  int size_log() const { return size_log_; }
  int size_lin() const { return size_lin_; }

  StateIndex bankrupt_index() const { return 0; }
  StateIndex top_index() const { return static_cast<StateIndex>(values_.size() - 1); }
  StateIndex one_index() const { return one_index_; }

  bool is_absorbing(StateIndex i) const { return i == 0 || i == top_index(); }

  /// Index of the largest grid value <= min(x, 1/alpha).
  StateIndex floor_index(double x) const {
    require(x >= 0.0 && !std::isnan(x), "cannot project a negative e-value");
    if (x >= cap()) return top_index();
    auto it = std::upper_bound(values_.begin(), values_.end(), x);
    return static_cast<StateIndex>(std::distance(values_.begin(), it) - 1);
  }

  friend bool operator==(const EGrid& a, const EGrid& b) { return a.values_ == b.values_; }

 private:
  EGrid(std::vector<double> values, double alpha, int size_log, int size_lin)
      : values_(std::move(values)), alpha_(alpha), size_log_(size_log), size_lin_(size_lin) {
    one_index_ = static_cast<StateIndex>(std::lower_bound(values_.begin(), values_.end(), 1.0) - values_.begin());
  }

  std::vector<double> values_;
  double alpha_ = 0.05;
  int size_log_ = 0;
  int size_lin_ = 0;
  StateIndex one_index_ = 0;
};

/// Sorted set of allowed bet fractions; always contains 0 and 1.
class BetGrid {
 public:
  /// {0, 1e-4, 1e-3, 0.01, 0.02, ..., 0.99, 0.999, 0.9999, 1}: 105 values.
  static BetGrid standard() {
    std::vector<double> v{0.0, 0.0001, 0.001};
    for (int k = 1; k <= 99; ++k) v.push_back(k / 100.0);
    v.insert(v.end(), {0.999, 0.9999, 1.0});
    return BetGrid(std::move(v));
  }

  explicit BetGrid(std::vector<double> values) : values_(std::move(values)) {
    std::sort(values_.begin(), values_.end());
    values_.erase(std::unique(values_.begin(), values_.end()), values_.end());
    require(!values_.empty() && values_.front() == 0.0 && values_.back() == 1.0,
            "bet grid must contain 0 and 1");
    require(values_.size() <= static_cast<std::size_t>(std::numeric_limits<BetIndex>::max()),
            "bet grid too large");
  }

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

  /// Index of an exact member, or -1.
  BetIndex index_of(double b) const {
    auto it = std::lower_bound(values_.begin(), values_.end(), b);
    if (it == values_.end() || *it != b) return -1;
    return static_cast<BetIndex>(it - values_.begin());
  }

  friend bool operator==(const BetGrid& a, const BetGrid& b) { return a.values_ == b.values_; }

 private:
  std::vector<double> values_;
};

inline StateIndex project_floor(double x, const EGrid& grid) { return grid.floor_index(x); }

struct TransitionDist {
  StateIndex up_index = 0;
  StateIndex down_index = 0;
  double p_up = 0.0;
};

/// One discrete step from grid state `state_index` under bet `bet`:
/// the success branch is floor(min(m (1 + b (1/theta0 - 1)), 1/alpha)),
/// the failure branch floor(m (1 - b)). Absorbing states (0 and 1/alpha) self-loop.
inline TransitionDist transition_kernel(StateIndex state_index, double bet, double theta_eval,
                                        const DesignSpec& spec, const EGrid& grid) {
  require(bet >= 0.0 && bet <= 1.0, "bet must lie in [0, 1]");
  if (grid.is_absorbing(state_index)) return {state_index, state_index, 1.0};
  const double m = grid[state_index];
  const double up = std::min(m * (1.0 + bet * (1.0 / spec.theta0 - 1.0)), grid.cap());
  const double down = m * (1.0 - bet);
  return {grid.floor_index(up), grid.floor_index(down), theta_eval};
}

/// Precomputed successor indices for every (state, bet) pair. The discrete
/// rule does not depend on t, so one table serves every stage.
class TransitionTable {
 public:
  TransitionTable(const EGrid& grid, const BetGrid& bets, double theta0)
      : states_(grid.size()), bets_(bets.size()), up_(states_ * bets_), down_(states_ * bets_) {
    const double odds = 1.0 / theta0 - 1.0;
    for (std::size_t i = 0; i < states_; ++i) {
      const auto si = static_cast<StateIndex>(i);
      for (std::size_t k = 0; k < bets_; ++k) {
        const std::size_t slot = i * bets_ + k;
        if (grid.is_absorbing(si)) {
          up_[slot] = down_[slot] = si;
          continue;
        }
        const double m = grid[i];
        up_[slot] = grid.floor_index(std::min(m * (1.0 + bets[k] * odds), grid.cap()));
        down_[slot] = grid.floor_index(m * (1.0 - bets[k]));
      }
    }
  }

  StateIndex up(StateIndex state, BetIndex bet) const { return up_[slot(state, bet)]; }
  StateIndex down(StateIndex state, BetIndex bet) const { return down_[slot(state, bet)]; }
  std::size_t states() const { return states_; }
  std::size_t bets() const { return bets_; }

 private:
  std::size_t slot(StateIndex state, BetIndex bet) const {
    return static_cast<std::size_t>(state) * bets_ + static_cast<std::size_t>(bet);
  }

  std::size_t states_;
  std::size_t bets_;
  std::vector<StateIndex> up_;
  std::vector<StateIndex> down_;
};

/// The pair of grids a solve runs on, shared immutably between tables.
struct Grids {
  std::shared_ptr<const EGrid> e;
  std::shared_ptr<const BetGrid> bets;

  static Grids standard(double alpha, int size_log = EGrid::kDefaultLogSize,
                        int size_lin = EGrid::kDefaultLinSize) {
    return {std::make_shared<const EGrid>(EGrid::build(alpha, size_log, size_lin)),
            std::make_shared<const BetGrid>(BetGrid::standard())};
  }
};

}  // namespace edesign
