#pragma once

#include <json.hpp>

#include <string>
#include <string_view>
#include <vector>

#include "edesign/core/design.hpp"
#include "edesign/core/errors.hpp"
#include "edesign/solver/rewards.hpp"

namespace edesign::io {

using Json = nlohmann::json;

/// Validation failure in a JSON document, carrying the offending field path
/// (e.g. "design.theta1" or "schedules[2]").
class ConfigError : public InvalidArgument {
 public:
  ConfigError(std::string field, const std::string& message)
      : InvalidArgument(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

inline std::string join_path(std::string_view parent, std::string_view child) {
  if (parent.empty()) return std::string(child);
  if (!child.empty() && child.front() == '[') return std::string(parent) + std::string(child);
  return std::string(parent) + "." + std::string(child);
}

namespace detail {

inline const Json& field(const Json& obj, std::string_view key, const std::string& path) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  const auto it = obj.find(std::string(key));
  if (it == obj.end()) throw ConfigError(join_path(path, key), "required field is missing");
  return *it;
}

inline double number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

inline long long integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<long long>();
}

inline std::string text(const Json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

inline double number_or(const Json& obj, std::string_view key, double fallback, const std::string& path) {
  const auto it = obj.find(std::string(key));
  return it == obj.end() ? fallback : number(*it, join_path(path, key));
}

inline long long integer_or(const Json& obj, std::string_view key, long long fallback, const std::string& path) {
  const auto it = obj.find(std::string(key));
  return it == obj.end() ? fallback : integer(*it, join_path(path, key));
}

}  // namespace detail

/// Block schedule from either an explicit size array, "seq", or "KxS" (K blocks of S).
inline BlockSchedule schedule_from_json(const Json& j, int n, const std::string& path) {
  BlockSchedule schedule;
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "seq") {
      schedule = BlockSchedule::fully_sequential(n);
    } else {
      const auto x = s.find('x');
      if (x == std::string::npos || x == 0 || x + 1 == s.size())
        throw ConfigError(path, "expected \"seq\", \"KxS\" or an array of block sizes, got \"" + s + "\"");
      long long count = 0, size = 0;
      try {
        count = std::stoll(s.substr(0, x));
        size = std::stoll(s.substr(x + 1));
      } catch (const std::exception&) {
        throw ConfigError(path, "malformed block schedule \"" + s + "\"");
      }
      if (count <= 0 || size <= 0) throw ConfigError(path, "block counts and sizes must be positive");
      schedule = BlockSchedule::equal_blocks(static_cast<int>(count), static_cast<int>(size));
    }
  } else if (j.is_array()) {
    std::vector<int> sizes;
    for (std::size_t i = 0; i < j.size(); ++i) {
      const long long v = detail::integer(j[i], path + "[" + std::to_string(i) + "]");
      if (v <= 0) throw ConfigError(path + "[" + std::to_string(i) + "]", "block sizes must be positive");
      sizes.push_back(static_cast<int>(v));
    }
    if (sizes.empty()) throw ConfigError(path, "block schedule must contain at least one block");
    schedule = BlockSchedule(std::move(sizes));
  } else {
    throw ConfigError(path, "expected \"seq\", \"KxS\" or an array of block sizes");
  }
  if (schedule.total() != n)
    throw ConfigError(path, "block sizes sum to " + std::to_string(schedule.total()) + ", expected n = " +
                                std::to_string(n));
  return schedule;
}

inline Json to_json(const BlockSchedule& s) { return Json(s.sizes()); }

inline Json to_json(const DesignSpec& spec) {
  Json j = {{"n", spec.n},
            {"theta0", spec.theta0},
            {"theta1", spec.theta1},
            {"alpha", spec.alpha},
            {"beta", spec.beta}};
  j["blocks"] = spec.blocks ? to_json(*spec.blocks) : Json(nullptr);
  return j;
}

inline DesignSpec design_from_json(const Json& j, const std::string& path = "design") {
  using namespace detail;
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  DesignSpec spec;
  const long long n = integer(field(j, "n", path), join_path(path, "n"));
  if (n < 1 || n > 100000) throw ConfigError(join_path(path, "n"), "must be a positive integer");
  spec.n = static_cast<int>(n);
  spec.theta0 = number(field(j, "theta0", path), join_path(path, "theta0"));
  spec.theta1 = number(field(j, "theta1", path), join_path(path, "theta1"));
  spec.alpha = number_or(j, "alpha", spec.alpha, path);
  spec.beta = number_or(j, "beta", spec.beta, path);
  if (const auto it = j.find("blocks"); it != j.end() && !it->is_null())
    spec.blocks = schedule_from_json(*it, spec.n, join_path(path, "blocks"));
  if (!(spec.theta0 > 0.0 && spec.theta0 < 1.0)) throw ConfigError(join_path(path, "theta0"), "must lie in (0, 1)");
  if (!(spec.theta1 > spec.theta0 && spec.theta1 < 1.0))
    throw ConfigError(join_path(path, "theta1"), "must lie in (theta0, 1)");
  if (!(spec.alpha > 0.0 && spec.alpha < 1.0)) throw ConfigError(join_path(path, "alpha"), "must lie in (0, 1)");
  if (!(spec.beta > 0.0 && spec.beta < 1.0)) throw ConfigError(join_path(path, "beta"), "must lie in (0, 1)");
  return spec;
}

inline Json to_json(const RewardSpec& r) {
  Json j = {{"kind", std::string(to_string(r.kind))}, {"lambda", r.lambda}};
  j["schedule"] = r.schedule ? to_json(*r.schedule) : Json(nullptr);
  return j;
}

inline RewardSpec rewards_from_json(const Json& j, int n, const std::string& path = "rewards") {
  using namespace detail;
  RewardSpec r;
  r.kind = reward_kind_from_string(text(field(j, "kind", path), join_path(path, "kind")));
  r.lambda = number_or(j, "lambda", 0.0, path);
  if (const auto it = j.find("schedule"); it != j.end() && !it->is_null())
    r.schedule = schedule_from_json(*it, n, join_path(path, "schedule"));
  return r;
}

}  // namespace edesign::io
