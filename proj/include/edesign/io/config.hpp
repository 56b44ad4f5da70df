#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edesign/io/format.hpp"
#include "edesign/io/json.hpp"
#include "edesign/solver/strategy.hpp"

namespace edesign::io {

inline constexpr int kConfigSchemaVersion = 1;

struct GridConfig {
  int size_log = EGrid::kDefaultLogSize;
  int size_lin = EGrid::kDefaultLinSize;
};

/// Batch run description. `design.blocks` is left empty; each schedule in
/// `schedules` is applied on top of the design when solving.
struct RunConfig {
  DesignSpec design;
  std::vector<Strategy> strategies;
  std::vector<BlockSchedule> schedules;
  std::vector<std::uint64_t> seeds;
  GridConfig grid;
  ConstrainedOptions newton;
  std::string output_dir;
};

/// Maps a byte offset in `text` to "line L, column C" (1-based).
inline std::string text_position(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline RunConfig config_from_json(const Json& j) {
  using namespace detail;
  if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
  const long long version = integer(field(j, "schema_version", ""), "schema_version");
  if (version != kConfigSchemaVersion)
    throw ConfigError("schema_version", "unsupported version " + std::to_string(version) + " (expected " +
                                            std::to_string(kConfigSchemaVersion) + ")");
  static const std::vector<std::string> known = {"schema_version", "design",  "strategies", "schedules",
                                                 "seeds",          "grid",    "newton",     "output_dir"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError(key, "unknown field");

  RunConfig cfg;
  cfg.design = design_from_json(field(j, "design", ""), "design");
  if (cfg.design.blocks) throw ConfigError("design.blocks", "use the top-level 'schedules' list instead");

  const Json& strategies = field(j, "strategies", "");
  if (!strategies.is_array()) throw ConfigError("strategies", "expected an array");
  if (strategies.empty()) throw ConfigError("strategies", "at least one strategy is required");
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    const std::string path = "strategies[" + std::to_string(i) + "]";
    const std::string name = text(strategies[i], path);
    Strategy s;
    try {
      s = strategy_from_string(name);
    } catch (const InvalidArgument& e) {
      throw ConfigError(path, e.what());
    }
    if (std::find(cfg.strategies.begin(), cfg.strategies.end(), s) != cfg.strategies.end())
      throw ConfigError(path, "duplicate strategy '" + name + "'");
    cfg.strategies.push_back(s);
  }

  if (const auto it = j.find("schedules"); it != j.end()) {
    if (!it->is_array()) throw ConfigError("schedules", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i)
      cfg.schedules.push_back(schedule_from_json((*it)[i], cfg.design.n, "schedules[" + std::to_string(i) + "]"));
  }
  if (cfg.schedules.empty()) cfg.schedules.push_back(BlockSchedule::fully_sequential(cfg.design.n));

  if (const auto it = j.find("seeds"); it != j.end()) {
    if (!it->is_array()) throw ConfigError("seeds", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const Json& s = (*it)[i];
      if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
        throw ConfigError("seeds[" + std::to_string(i) + "]", "expected a nonnegative integer");
      cfg.seeds.push_back(s.get<std::uint64_t>());
    }
  }

  if (const auto it = j.find("grid"); it != j.end()) {
    if (!it->is_object()) throw ConfigError("grid", "expected an object");
    cfg.grid.size_log = static_cast<int>(integer_or(*it, "size_log", cfg.grid.size_log, "grid"));
    cfg.grid.size_lin = static_cast<int>(integer_or(*it, "size_lin", cfg.grid.size_lin, "grid"));
    if (cfg.grid.size_log < 1 || cfg.grid.size_log > 1000000) throw ConfigError("grid.size_log", "out of range");
    if (cfg.grid.size_lin < 2 || cfg.grid.size_lin > 1000000) throw ConfigError("grid.size_lin", "out of range");
  }

  if (const auto it = j.find("newton"); it != j.end()) {
    if (!it->is_object()) throw ConfigError("newton", "expected an object");
    cfg.newton.eps_newton = number_or(*it, "eps", cfg.newton.eps_newton, "newton");
    cfg.newton.max_iterations =
        static_cast<int>(integer_or(*it, "max_iterations", cfg.newton.max_iterations, "newton"));
    if (!(cfg.newton.eps_newton > 0.0 && cfg.newton.eps_newton < 1.0))
      throw ConfigError("newton.eps", "must lie in (0, 1)");
    if (cfg.newton.max_iterations < 1) throw ConfigError("newton.max_iterations", "must be positive");
  }

  if (const auto it = j.find("output_dir"); it != j.end()) cfg.output_dir = text(*it, "output_dir");
  return cfg;
}

inline RunConfig parse_config(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("", "malformed JSON at " + text_position(text, e.byte == 0 ? 0 : e.byte - 1) + ": " +
                              e.what());
  }
  return config_from_json(j);
}

inline RunConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

/// Config echoed back in canonical form (defaults filled in).
inline Json to_json(const RunConfig& cfg) {
  Json strategies = Json::array();
  for (Strategy s : cfg.strategies) strategies.push_back(std::string(to_string(s)));
  Json schedules = Json::array();
  for (const auto& s : cfg.schedules) schedules.push_back(to_json(s));
  return Json{{"schema_version", kConfigSchemaVersion},
              {"design", to_json(cfg.design)},
              {"strategies", strategies},
              {"schedules", schedules},
              {"seeds", cfg.seeds},
              {"grid", {{"size_log", cfg.grid.size_log}, {"size_lin", cfg.grid.size_lin}}},
              {"newton", {{"eps", cfg.newton.eps_newton}, {"max_iterations", cfg.newton.max_iterations}}}};
}

}  // namespace edesign::io
