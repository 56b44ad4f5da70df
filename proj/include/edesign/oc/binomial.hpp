#pragma once

#include <cmath>

#include "edesign/core/design.hpp"

namespace edesign {

/// Fixed-sample one-sided binomial test: reject when at least `critical_value`
/// of the n outcomes are successes.
class BinomialBaseline {
 public:
  explicit BinomialBaseline(const DesignSpec& spec) : n_(spec.n) {
    spec.validate();
    critical_value_ = n_ + 1;
    for (int k = n_; k >= 0; --k) {
      if (upper_tail(n_, k, spec.theta0) > spec.alpha) break;
      critical_value_ = k;
    }
  }

  int n() const { return n_; }
  int critical_value() const { return critical_value_; }
  double power_at(double theta) const { return upper_tail(n_, critical_value_, theta); }

  /// P(X >= k) for X ~ Binomial(n, p), summed from exact log-space pmf terms.
  static double upper_tail(int n, int k, double p) {
    if (k <= 0) return 1.0;
    if (k > n) return 0.0;
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    double sum = 0.0;
    for (int j = k; j <= n; ++j) {
      const double log_pmf = std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) +
                             j * std::log(p) + (n - j) * std::log1p(-p);
      sum += std::exp(log_pmf);
    }
    return std::min(sum, 1.0);
  }

 private:
  int n_ = 0;
  int critical_value_ = 0;
};

inline BinomialBaseline binomial_baseline(const DesignSpec& spec) { return BinomialBaseline(spec); }

}  // namespace edesign
