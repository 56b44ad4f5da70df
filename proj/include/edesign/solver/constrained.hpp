#pragma once

// Power-constrained design with a futility action, solved through its
// Lagrangian relaxation: for a multiplier lambda the inner problem rewards
// a rejection with lambda and charges one unit per recruited participant;
// lambda is then searched so that the power of the lambda-optimal policy
// lands just above 1 - beta.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "edesign/oc/forward.hpp"
#include "edesign/solver/backward.hpp"

namespace edesign {

struct LagrangeIteration {
  double lambda = 0.0;
  double power = 0.0;
  double ess = 0.0;
};

struct LagrangeTrace {
  std::vector<LagrangeIteration> iterations;
  double final_lambda = 0.0;
  double final_power = 0.0;
  double final_ess = 0.0;
  double pmax_power = 0.0;
  /// How the accepted lambda was found: "secant" or "bisection".
  std::string final_step;
};

struct ConstrainedOptions {
  double eps_newton = 0.01;
  int max_iterations = 60;
};

struct ConstrainedSolution {
  PolicyTable policy;
  ValueTable values;
  LagrangeTrace trace;
};

namespace detail {

inline RewardSpec constrained_rewards(const DesignSpec& spec, double lambda) {
  if (spec.blocks && !spec.blocks->is_fully_sequential())
    return RewardSpec::blocked_constrained(lambda, *spec.blocks);
  return RewardSpec::constrained(lambda);
}

}  // namespace detail

/// Lagrangian search on lambda.
///
/// The power of the lambda-optimal policy is a nondecreasing step function of
/// lambda. Starting from the bracket [0, n] (widened by doubling while the
/// upper end is still underpowered), each step proposes the secant point
/// aimed at 1 - beta + eps/2 and falls back to bisection when that point
/// hugs a bracket end. Accepts the first policy with
/// 1 - beta < power <= 1 - beta + eps.
inline ConstrainedSolution solve_constrained(const Model& model, const ConstrainedOptions& options = {}) {
  const DesignSpec& spec = model.spec();
  require(options.eps_newton > 0.0, "eps_newton must be positive");
  require(options.max_iterations > 0, "iteration cap must be positive");
  const double required = 1.0 - spec.beta;
  const double ceiling = required + options.eps_newton;
  const double aim = required + 0.5 * options.eps_newton;

  LagrangeTrace trace;
  trace.pmax_power = forward_oc(solve_pmax(model).policy, spec.theta1).final_rejection();
  if (!(trace.pmax_power > required))
    throw InfeasibleConstraint("the power-maximizing policy reaches only " + std::to_string(trace.pmax_power) +
                               " < required " + std::to_string(required));

  int evaluations = 0;
  auto evaluate = [&](double lambda) {
    if (++evaluations > options.max_iterations)
      throw NonConvergence("Lagrangian search did not reach the power window within " +
                           std::to_string(options.max_iterations) + " iterations");
    Solution s = backward_induct(model, detail::constrained_rewards(spec, lambda));
    const OCProfile oc = forward_oc(s.policy, spec.theta1);
    trace.iterations.push_back({lambda, oc.final_rejection(), oc.ess});
    return std::pair{std::move(s), oc};
  };
  auto accept = [&](std::pair<Solution, OCProfile> result, const char* step) {
    auto& [solution, oc] = result;
    trace.final_lambda = trace.iterations.back().lambda;
    trace.final_power = oc.final_rejection();
    trace.final_ess = oc.ess;
    trace.final_step = step;
    solution.policy.strategy = "constrained";
    solution.policy.diagnostics = {{"lambda", trace.final_lambda},
                                   {"power_theta1", trace.final_power},
                                   {"ess_theta1", trace.final_ess},
                                   {"iterations", static_cast<double>(trace.iterations.size())}};
    return ConstrainedSolution{std::move(solution.policy), std::move(solution.values), std::move(trace)};
  };
  auto in_window = [&](double power) { return power > required && power <= ceiling; };

  double lo = 0.0;
  double power_lo = evaluate(lo).second.final_rejection();
  double hi = std::max(1.0, static_cast<double>(spec.n));
  auto result_hi = evaluate(hi);
  while (!(result_hi.second.final_rejection() > required)) {
    lo = hi;
    power_lo = result_hi.second.final_rejection();
    hi *= 2.0;
    result_hi = evaluate(hi);
  }
  double power_hi = result_hi.second.final_rejection();
  if (in_window(power_hi)) return accept(std::move(result_hi), "bracket");

  double previous_width = std::numeric_limits<double>::infinity();
  while (true) {
    const double width = hi - lo;
    if (width <= 1e-9 * hi)
      throw NonConvergence("power jumps across the window at lambda=" + std::to_string(hi) + " (from " +
                           std::to_string(power_lo) + " to " + std::to_string(power_hi) + ")");
    double lambda = lo + (aim - power_lo) * width / (power_hi - power_lo);
    const char* step = "secant";
    if (!(lambda > lo + 0.01 * width && lambda < hi - 0.01 * width) || width > 0.5 * previous_width) {
      lambda = 0.5 * (lo + hi);
      step = "bisection";
    }
    previous_width = step[0] == 's' ? width : std::numeric_limits<double>::infinity();
    auto result = evaluate(lambda);
    const double power = result.second.final_rejection();
    if (in_window(power)) return accept(std::move(result), step);
    if (power > required) {
      hi = lambda;
      power_hi = power;
    } else {
      lo = lambda;
      power_lo = power;
    }
  }
}

inline ConstrainedSolution solve_constrained(const DesignSpec& spec, const Grids& grids,
                                             const ConstrainedOptions& options = {}) {
  return solve_constrained(Model(spec, grids), options);
}

}  // namespace edesign
