#pragma once

// Continuous-domain e-process primitives for one-sided tests of a binary
// success probability: the capital update, Kelly/GROW baselines, the
// equivalent ticket and likelihood-ratio parameterizations, zone labels and
// the closed-form analysis of the last bet before the horizon.

#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "edesign/core/design.hpp"
#include "edesign/core/errors.hpp"

namespace edesign {

/// Analysis time and current e-value.
struct EState {
  int t = 0;
  double m = 1.0;
};

/// Bet(b) with b in [0, 1], or Stop (futility, constrained designs only).
struct Action {
  enum class Kind : std::uint8_t { Bet, Stop };
  Kind kind = Kind::Bet;
  double bet = 0.0;

  static Action stop() { return {Kind::Stop, 0.0}; }
  static Action make_bet(double b) {
    require(b >= 0.0 && b <= 1.0, "bet must lie in [0, 1]");
    return {Kind::Bet, b};
  }
  bool is_stop() const { return kind == Kind::Stop; }

  friend bool operator==(const Action&, const Action&) = default;
};

enum class Zone : std::uint8_t { Rejected, Hopeless, AlmostHopeless, Open, Bankrupt };

inline std::string_view to_string(Zone z) {
  switch (z) {
    case Zone::Rejected: return "rejected";
    case Zone::Hopeless: return "hopeless";
    case Zone::AlmostHopeless: return "almost_hopeless";
    case Zone::Open: return "open";
    case Zone::Bankrupt: return "bankrupt";
  }
  return "unknown";
}

struct FormulationEquivalents {
  double lambda = 0.0;  ///< ticket count, b / theta0
  double q = 0.0;       ///< implied alternative, theta0 + (1 - theta0) b
};

struct DiagnosticBounds {
  std::vector<double> m_upper;  ///< hits 1/alpha at the horizon under the Kelly growth rate
  std::vector<double> m_lower;  ///< hits 1/alpha after (n - t)/2 Kelly successes
};

/// Outcomes, bets and the resulting e-values; evalues[0] == 1 and
/// evalues.size() == outcomes.size() + 1.
struct EProcessPath {
  std::vector<int> outcomes;
  std::vector<double> bets;
  std::vector<double> evalues{1.0};
  std::vector<int> successes{0};
};

namespace detail {

inline void check_probability(double p, const char* name) {
  require(p > 0.0 && p < 1.0, std::string(name) + " must lie in (0, 1)");
}

inline void check_bet(double b) { require(b >= 0.0 && b <= 1.0, "bet must lie in [0, 1]"); }

/// Relative slack used only when comparing e-values against the zone edges
/// theta0^k / alpha, which are themselves products of rounded decimals.
constexpr double kZoneEdgeTolerance = 1e-12;

inline bool at_or_above(double m, double edge) { return m >= edge * (1.0 - kZoneEdgeTolerance); }

}  // namespace detail

/// One step of the bettor's capital: a fraction b of m is staked on y = 1 at odds 1/theta0.
inline double capital_update(double m, double b, int y, double theta0) {
  detail::check_bet(b);
  detail::check_probability(theta0, "theta0");
  require(m >= 0.0, "e-value must be nonnegative");
  require(y == 0 || y == 1, "outcome must be 0 or 1");
  if (m == 0.0) return 0.0;
  return y == 1 ? m * (1.0 + b * (1.0 / theta0 - 1.0)) : m * (1.0 - b);
}

/// Growth-rate optimal bet against theta0 when the alternative is theta1.
inline double kelly_bet(double theta0, double theta1) {
  detail::check_probability(theta0, "theta0");
  detail::check_probability(theta1, "theta1");
  require(theta1 >= theta0, "kelly_bet requires theta1 >= theta0");
  return (theta1 - theta0) / (1.0 - theta0);
}

/// The GROW e-process after s successes in t outcomes: the likelihood ratio of theta1 to theta0.
inline double grow_evalue(int s, int t, double theta0, double theta1) {
  require(s >= 0 && s <= t, "grow_evalue requires 0 <= s <= t");
  return std::pow(theta1 / theta0, s) * std::pow((1.0 - theta1) / (1.0 - theta0), t - s);
}

inline FormulationEquivalents formulation_equivalents(double b, double theta0) {
  detail::check_bet(b);
  detail::check_probability(theta0, "theta0");
  return {b / theta0, theta0 + (1.0 - theta0) * b};
}

/// Expected log-growth of the capital under the alternative implied by bet b.
/// At b = 1 the failure branch has weight zero and the rate is log(1/theta0).
inline double growth_rate(double b, double theta0) {
  detail::check_bet(b);
  detail::check_probability(theta0, "theta0");
  if (b == 1.0) return std::log(1.0 / theta0);
  const double q = theta0 + (1.0 - theta0) * b;
  return q * std::log1p(b * (1.0 / theta0 - 1.0)) + (1.0 - q) * std::log1p(-b);
}

namespace detail {

inline void check_final_bet_domain(double m_prev, double alpha, double theta0) {
  check_probability(alpha, "alpha");
  check_probability(theta0, "theta0");
  require(m_prev >= 0.0, "e-value must be nonnegative");
  if (m_prev >= 1.0 / alpha) throw AlreadyRejected("e-value already at or above 1/alpha");
  if (m_prev / theta0 < 1.0 / alpha)
    throw NoSolution("1/alpha cannot be reached with one bet: conditional power is zero");
}

}  // namespace detail

/// Smallest final bet whose success branch reaches 1/alpha. Every bet in
/// [boundary, 1] has conditional power theta1; every smaller bet has power 0.
/// At or above 1/alpha the boundary is 0.
inline double final_bet_power_boundary(double m_prev, double alpha, double theta0) {
  detail::check_probability(alpha, "alpha");
  if (m_prev >= 1.0 / alpha) return 0.0;
  detail::check_final_bet_domain(m_prev, alpha, theta0);
  const double b = (theta0 / (alpha * m_prev) - theta0) / (1.0 - theta0);
  return std::clamp(b, 0.0, 1.0);
}

/// Final bet whose implied-alternative growth rate equals log(1/(alpha m_prev)),
/// i.e. the bet that is expected to land exactly on 1/alpha. Bisection on
/// [boundary, 1]; growth_rate is increasing there so the root is unique.
inline double solve_final_bet(double m_prev, double alpha, double theta0, double tolerance = 1e-12) {
  detail::check_final_bet_domain(m_prev, alpha, theta0);
  const double target = std::log(1.0 / (alpha * m_prev));
  if (growth_rate(1.0, theta0) == target) return 1.0;
  double lo = final_bet_power_boundary(m_prev, alpha, theta0);
  double hi = 1.0;
  if (growth_rate(lo, theta0) >= target) return lo;
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (growth_rate(mid, theta0) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// e-value below which 1/alpha is out of reach with `remaining` outcomes left.
inline double hopeless_edge(int remaining, double alpha, double theta0) {
  return std::pow(theta0, remaining) / alpha;
}

/// Zone label of an e-state. Values on the hopeless edge (within rounding of
/// the decimal inputs) are AlmostHopeless: all successes still reach 1/alpha.
inline Zone classify_zone(const EState& state, const DesignSpec& spec) {
  const double m = state.m;
  if (m >= spec.threshold()) return Zone::Rejected;
  if (m <= 0.0) return Zone::Bankrupt;
  const int remaining = spec.n - state.t;
  if (!detail::at_or_above(m, hopeless_edge(remaining, spec.alpha, spec.theta0))) return Zone::Hopeless;
  if (remaining > 0 && !detail::at_or_above(m, hopeless_edge(remaining - 1, spec.alpha, spec.theta0)))
    return Zone::AlmostHopeless;
  return Zone::Open;
}

/// Kelly-rate overlays for policy plots.
///
/// Both bounds are taken in log space: m_upper(t) = exp(log(1/alpha) - (n-t) g)
/// with g the one-step Kelly growth rate under theta1, and
/// m_lower(t) = exp(log(1/alpha) - (n-t)/2 log(theta1/theta0)). Since
/// (1/2) log(theta1/theta0) > g, m_lower(t) <= m_upper(t).
inline DiagnosticBounds diagnostic_bounds(const DesignSpec& spec) {
  spec.validate();
  const double kelly = kelly_bet(spec.theta0, spec.theta1);
  const double g = spec.theta1 * std::log1p(kelly * (1.0 / spec.theta0 - 1.0)) +
                   (1.0 - spec.theta1) * std::log1p(-kelly);
  const double log_threshold = std::log(spec.threshold());
  const double log_ratio = std::log(spec.theta1 / spec.theta0);
  DiagnosticBounds out;
  out.m_upper.resize(spec.n + 1);
  out.m_lower.resize(spec.n + 1);
  for (int t = 0; t <= spec.n; ++t) {
    const double remaining = spec.n - t;
    out.m_upper[t] = std::exp(log_threshold - remaining * g);
    out.m_lower[t] = std::exp(log_threshold - 0.5 * remaining * log_ratio);
  }
  return out;
}

/// Folds capital_update over the given outcomes and bets.
inline EProcessPath replay_path(std::span<const int> outcomes, std::span<const double> bets, double theta0) {
  require(outcomes.size() == bets.size(), "outcomes and bets must have equal length");
  EProcessPath path;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    path.outcomes.push_back(outcomes[i]);
    path.bets.push_back(bets[i]);
    path.evalues.push_back(capital_update(path.evalues.back(), bets[i], outcomes[i], theta0));
    path.successes.push_back(path.successes.back() + outcomes[i]);
  }
  return path;
}

}  // namespace edesign
