#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "edesign/solver/backward.hpp"
#include "edesign/solver/constrained.hpp"

namespace edesign {

enum class Strategy { PMax, ESSMin, Constrained, Grow };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::PMax: return "pmax";
    case Strategy::ESSMin: return "essmin";
    case Strategy::Constrained: return "constrained";
    case Strategy::Grow: return "grow";
  }
  return "unknown";
}

inline Strategy strategy_from_string(std::string_view s) {
  if (s == "pmax") return Strategy::PMax;
  if (s == "essmin") return Strategy::ESSMin;
  if (s == "constrained") return Strategy::Constrained;
  if (s == "grow") return Strategy::Grow;
  throw InvalidArgument("unknown strategy '" + std::string(s) + "'");
}

struct StrategySolution {
  PolicyTable policy;
  std::optional<ValueTable> values;
  std::optional<LagrangeTrace> trace;
};

/// Solves one strategy on the model; the model's block schedule selects the
/// blocked reward variants.
inline StrategySolution solve_strategy(const Model& model, Strategy strategy,
                                       const ConstrainedOptions& options = {}) {
  switch (strategy) {
    case Strategy::PMax: {
      auto s = solve_pmax(model);
      return {std::move(s.policy), std::move(s.values), std::nullopt};
    }
    case Strategy::ESSMin: {
      auto s = solve_essmin(model);
      return {std::move(s.policy), std::move(s.values), std::nullopt};
    }
    case Strategy::Constrained: {
      auto s = solve_constrained(model, options);
      return {std::move(s.policy), std::move(s.values), std::move(s.trace)};
    }
    case Strategy::Grow: return {grow_policy(model), std::nullopt, std::nullopt};
  }
  throw InvalidArgument("unknown strategy");
}

/// Blocked design: per-outcome betting within blocks, costs and Stop only at
/// block boundaries. The power-maximizing policy does not depend on the schedule.
inline StrategySolution solve_blocked(const Model& model, Strategy strategy,
                                      const ConstrainedOptions& options = {}) {
  require(model.spec().blocks.has_value(), "blocked solve requires a block schedule");
  return solve_strategy(model, strategy, options);
}

}  // namespace edesign
