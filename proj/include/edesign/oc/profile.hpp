#pragma once

#include <vector>

namespace edesign {

/// Exact operating characteristics of a policy under one success probability.
///
/// Curves are indexed by participant t = 0..n. Rejection is credited at the
/// step where the e-value reaches 1/alpha; futility (Stop, bankruptcy and,
/// for horizon-aware designs, hopeless-zone entry) is observed at analysis
/// points only and held constant in between. The futility curve is flat at
/// the final analysis.
struct OCProfile {
  double theta_eval = 0.0;
  std::vector<double> cumulative_rejection;
  std::vector<double> cumulative_futility;
  /// Live mass in the almost-hopeless zone at t (diagnostic, not a stopping event).
  std::vector<double> almost_hopeless_mass;
  /// E[min(n, tau)] with tau the first efficacy hit, Stop or bankruptcy, rounded up to block ends.
  double ess = 0.0;
  std::vector<int> analysis_points;

  double final_rejection() const { return cumulative_rejection.back(); }
  double final_futility() const { return cumulative_futility.back(); }
};

}  // namespace edesign
