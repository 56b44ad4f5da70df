#pragma once

#include <algorithm>
#include <string>

#include "edesign/io/format.hpp"
#include "edesign/io/json.hpp"
#include "edesign/oc/profile.hpp"

namespace edesign::io {

inline std::string oc_csv(const OCProfile& under_theta0, const OCProfile& under_theta1) {
  require(under_theta0.cumulative_rejection.size() == under_theta1.cumulative_rejection.size(),
          "profiles must cover the same horizon");
  CsvWriter csv({"t", "cum_rejection_theta0", "cum_rejection_theta1", "cum_futility_theta0", "cum_futility_theta1",
                 "ahz_theta0", "ahz_theta1", "is_analysis"});
  const auto& points = under_theta1.analysis_points;
  for (std::size_t t = 0; t < under_theta1.cumulative_rejection.size(); ++t) {
    const bool analysis = std::binary_search(points.begin(), points.end(), static_cast<int>(t));
    csv.add(static_cast<int>(t), under_theta0.cumulative_rejection[t], under_theta1.cumulative_rejection[t],
            under_theta0.cumulative_futility[t], under_theta1.cumulative_futility[t],
            under_theta0.almost_hopeless_mass[t], under_theta1.almost_hopeless_mass[t], analysis ? 1 : 0);
  }
  return csv.str();
}

inline Json oc_summary(const OCProfile& under_theta0, const OCProfile& under_theta1) {
  return Json{{"schema_version", 1},
              {"theta0", under_theta0.theta_eval},
              {"theta1", under_theta1.theta_eval},
              {"ess_theta1", under_theta1.ess},
              {"ess_theta0", under_theta0.ess},
              {"final_power", under_theta1.final_rejection()},
              {"final_size", under_theta0.final_rejection()},
              {"final_futility_theta0", under_theta0.final_futility()},
              {"final_futility_theta1", under_theta1.final_futility()},
              {"analysis_points", under_theta1.analysis_points}};
}

}  // namespace edesign::io
