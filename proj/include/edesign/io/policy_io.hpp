#pragma once

#include <memory>
#include <string>

#include "edesign/io/format.hpp"
#include "edesign/io/hash.hpp"
#include "edesign/io/json.hpp"
#include "edesign/solver/policy.hpp"

namespace edesign::io {

inline constexpr int kPolicySchemaVersion = 1;

/// Policy table as CSV: one row per (t, grid_index) for t in [first_stage, n).
inline std::string policy_csv(const PolicyTable& policy) {
  CsvWriter csv({"t", "grid_index", "e_value", "action_kind", "bet", "continue_bet"});
  const EGrid& grid = policy.e_grid();
  const BetGrid& bets = policy.bet_grid();
  for (int t = policy.first_stage(); t < policy.n(); ++t) {
    for (StateIndex i = 0; i < static_cast<StateIndex>(grid.size()); ++i) {
      const BetIndex code = policy.code(t, i);
      const double cont = policy.continuation_bet(t, i);
      if (code == PolicyTable::kStop)
        csv.add(t, i, grid[i], "stop", std::string(), cont);
      else
        csv.add(t, i, grid[i], "bet", bets[code], cont);
    }
  }
  return csv.str();
}

inline Json policy_sidecar(const PolicyTable& policy) {
  const EGrid& grid = policy.e_grid();
  Json diagnostics = Json::object();
  for (const auto& [k, v] : policy.diagnostics) diagnostics[k] = v;
  return Json{{"schema_version", kPolicySchemaVersion},
              {"kind", "edesign.policy"},
              {"strategy", policy.strategy},
              {"spec", to_json(policy.spec())},
              {"e_grid",
               {{"size_log", grid.size_log()},
                {"size_lin", grid.size_lin()},
                {"size", grid.size()},
                {"sha256", grid_hash(grid)}}},
              {"bet_grid", {{"values", policy.bet_grid().values()}, {"sha256", grid_hash(policy.bet_grid())}}},
              {"rewards", to_json(policy.rewards())},
              {"first_stage", policy.first_stage()},
              {"futility_from_hopeless", policy.futility_from_hopeless},
              {"diagnostics", diagnostics}};
}

/// Rebuilds a policy from its CSV and sidecar. Grids are regenerated from the
/// sidecar's parameters and must reproduce the recorded hashes; every CSV
/// e_value must equal the regenerated grid value at its index.
inline PolicyTable import_policy(std::string_view csv_text, const Json& sidecar) {
  using namespace detail;
  const long long version = integer(field(sidecar, "schema_version", ""), "schema_version");
  if (version != kPolicySchemaVersion)
    throw ConfigError("schema_version", "unsupported policy schema version " + std::to_string(version));
  const DesignSpec spec = design_from_json(field(sidecar, "spec", ""), "spec");

  const Json& eg = field(sidecar, "e_grid", "");
  auto e = std::make_shared<const EGrid>(
      EGrid::build(spec.alpha, static_cast<int>(integer(field(eg, "size_log", "e_grid"), "e_grid.size_log")),
                   static_cast<int>(integer(field(eg, "size_lin", "e_grid"), "e_grid.size_lin"))));
  if (grid_hash(*e) != text(field(eg, "sha256", "e_grid"), "e_grid.sha256"))
    throw GridMismatch("regenerated e-grid does not match the recorded sha256");

  const Json& bg = field(sidecar, "bet_grid", "");
  const Json& bet_values = field(bg, "values", "bet_grid");
  if (!bet_values.is_array()) throw ConfigError("bet_grid.values", "expected an array");
  std::vector<double> bv;
  for (std::size_t k = 0; k < bet_values.size(); ++k)
    bv.push_back(number(bet_values[k], "bet_grid.values[" + std::to_string(k) + "]"));
  auto bets = std::make_shared<const BetGrid>(std::move(bv));
  if (grid_hash(*bets) != text(field(bg, "sha256", "bet_grid"), "bet_grid.sha256"))
    throw GridMismatch("bet grid does not match the recorded sha256");

  RewardSpec rewards = rewards_from_json(field(sidecar, "rewards", ""), spec.n);
  const int first_stage = static_cast<int>(integer(field(sidecar, "first_stage", ""), "first_stage"));
  PolicyTable policy(Model(spec, Grids{e, bets}), std::move(rewards), first_stage);
  policy.strategy = text(field(sidecar, "strategy", ""), "strategy");
  const Json& ffh = field(sidecar, "futility_from_hopeless", "");
  if (!ffh.is_boolean()) throw ConfigError("futility_from_hopeless", "expected a boolean");
  policy.futility_from_hopeless = ffh.get<bool>();
  if (const auto it = sidecar.find("diagnostics"); it != sidecar.end())
    for (const auto& [k, v] : it->items()) policy.diagnostics[k] = number(v, "diagnostics." + k);

  const CsvTable table = parse_csv(csv_text);
  const std::size_t c_t = table.column("t"), c_i = table.column("grid_index"), c_e = table.column("e_value"),
                    c_kind = table.column("action_kind"), c_bet = table.column("bet"),
                    c_cont = table.column("continue_bet");
  const std::size_t expected = static_cast<std::size_t>(spec.n - first_stage) * e->size();
  if (table.rows.size() != expected)
    throw InvalidArgument("policy csv has " + std::to_string(table.rows.size()) + " rows, expected " +
                          std::to_string(expected));
  auto bet_code = [&](const std::string& cell, std::size_t row) {
    const BetIndex code = bets->index_of(parse_double(cell, "bet"));
    if (code < 0) throw GridMismatch("row " + std::to_string(row + 2) + ": bet " + cell + " is not on the bet grid");
    return code;
  };
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const long long t = parse_int(row[c_t], "t");
    const long long i = parse_int(row[c_i], "grid_index");
    if (t < first_stage || t >= spec.n || i < 0 || i >= static_cast<long long>(e->size()))
      throw InvalidArgument("row " + std::to_string(r + 2) + ": state out of range");
    if (parse_double(row[c_e], "e_value") != (*e)[static_cast<std::size_t>(i)])
      throw GridMismatch("row " + std::to_string(r + 2) + ": e_value differs from the regenerated grid");
    const auto si = static_cast<StateIndex>(i);
    policy.set_continuation(static_cast<int>(t), si, bet_code(row[c_cont], r));
    if (row[c_kind] == "stop")
      policy.set(static_cast<int>(t), si, PolicyTable::kStop);
    else if (row[c_kind] == "bet")
      policy.set(static_cast<int>(t), si, bet_code(row[c_bet], r));
    else
      throw InvalidArgument("row " + std::to_string(r + 2) + ": unknown action_kind '" + row[c_kind] + "'");
  }
  return policy;
}

inline void write_policy(const PolicyTable& policy, const std::string& csv_path, const std::string& json_path) {
  write_file(csv_path, policy_csv(policy));
  write_file(json_path, policy_sidecar(policy).dump(2) + "\n");
}

inline PolicyTable read_policy(const std::string& csv_path, const std::string& json_path) {
  Json sidecar;
  try {
    sidecar = Json::parse(read_file(json_path));
  } catch (const Json::parse_error& e) {
    throw ConfigError("", json_path + ": " + e.what());
  }
  return import_policy(read_file(csv_path), sidecar);
}

}  // namespace edesign::io
