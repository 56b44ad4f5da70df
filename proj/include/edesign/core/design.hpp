#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "edesign/core/errors.hpp"

namespace edesign {

/// Partition of the n participants into consecutive analysis blocks.
///
/// Outcomes are still processed one at a time in arrival order; the schedule
/// only decides at which times t an interim analysis (and therefore a
/// recruitment or stopping decision) takes place. Time 0 is always a
/// boundary, as is every cumulative block total.
class BlockSchedule {
 public:
  BlockSchedule() = default;

  explicit BlockSchedule(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    require(!sizes_.empty(), "block schedule must contain at least one block");
    for (int s : sizes_) require(s > 0, "block sizes must be positive");
    ends_.reserve(sizes_.size() + 1);
    ends_.push_back(0);
    for (int s : sizes_) ends_.push_back(ends_.back() + s);
  }

  static BlockSchedule fully_sequential(int n) { return BlockSchedule(std::vector<int>(n, 1)); }

  static BlockSchedule equal_blocks(int count, int size) {
    return BlockSchedule(std::vector<int>(count, size));
  }

  const std::vector<int>& sizes() const { return sizes_; }
  int total() const { return ends_.empty() ? 0 : ends_.back(); }
  bool empty() const { return sizes_.empty(); }

  /// Analysis times 0 = n̄_0 < n̄_1 < ... < n.
  const std::vector<int>& boundaries() const { return ends_; }

  bool is_boundary(int t) const { return std::binary_search(ends_.begin(), ends_.end(), t); }

  /// Size of the block recruited after the analysis at boundary t (0 at t = n).
  int next_block_size(int t) const {
    auto it = std::lower_bound(ends_.begin(), ends_.end(), t);
    if (it == ends_.end() || *it != t || std::next(it) == ends_.end()) return 0;
    return *std::next(it) - t;
  }

  /// Smallest boundary >= t.
  int block_end(int t) const { return *std::lower_bound(ends_.begin(), ends_.end(), t); }

  bool is_fully_sequential() const {
    return std::all_of(sizes_.begin(), sizes_.end(), [](int s) { return s == 1; });
  }

  /// Short human-readable label: "seq", "10x5", or "25-25".
  std::string label() const {
    if (sizes_.empty() || is_fully_sequential()) return "seq";
    if (std::all_of(sizes_.begin(), sizes_.end(), [&](int s) { return s == sizes_.front(); }))
      return std::to_string(sizes_.size()) + "x" + std::to_string(sizes_.front());
    std::string out;
    for (std::size_t i = 0; i < sizes_.size(); ++i) {
      if (i) out += '-';
      out += std::to_string(sizes_[i]);
    }
    return out;
  }

  friend bool operator==(const BlockSchedule& a, const BlockSchedule& b) { return a.sizes_ == b.sizes_; }

 private:
  std::vector<int> sizes_;
  std::vector<int> ends_;
};

/// The trial problem: horizon, hypotheses, error rates and block schedule.
struct DesignSpec {
  int n = 0;
  double theta0 = 0.0;
  double theta1 = 0.0;
  double alpha = 0.05;
  double beta = 0.2;
  std::optional<BlockSchedule> blocks;

  /// The efficacy boundary 1/alpha.
  double threshold() const { return 1.0 / alpha; }

  /// Schedule actually in force: the configured one or one analysis per participant.
  BlockSchedule schedule() const { return blocks ? *blocks : BlockSchedule::fully_sequential(n); }

  void validate() const {
    require(n >= 1, "n must be a positive integer");
    require(theta0 > 0.0 && theta0 < 1.0, "theta0 must lie in (0, 1)");
    require(theta1 > theta0 && theta1 < 1.0, "theta1 must lie in (theta0, 1)");
    require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    require(beta > 0.0 && beta < 1.0, "beta must lie in (0, 1)");
    if (blocks) require(blocks->total() == n, "block sizes must sum to n");
  }
};

}  // namespace edesign
