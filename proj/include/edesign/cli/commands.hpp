#pragma once

#include <atomic>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "edesign/core/betting.hpp"
#include "edesign/io/config.hpp"
#include "edesign/io/format.hpp"
#include "edesign/io/hash.hpp"
#include "edesign/io/oc_io.hpp"
#include "edesign/io/policy_io.hpp"
#include "edesign/oc/binomial.hpp"
#include "edesign/oc/forward.hpp"
#include "edesign/oc/simulate.hpp"
#include "edesign/solver/strategy.hpp"

namespace edesign::cli {

namespace fs = std::filesystem;
using io::Json;

inline constexpr const char* kGenerator = "edesign 1.0.0";

struct ManifestEntry {
  std::string path;  ///< relative to the output directory, '/'-separated
  std::string sha256;
  std::size_t bytes = 0;
};

/// Files written by one command plus the resolved config that produced them.
struct OutputBundle {
  std::string command;
  fs::path root;
  std::vector<ManifestEntry> files;
  Json resolved_config;

  void write(const std::string& relative, std::string_view content) {
    const fs::path target = root / fs::path(relative);
    fs::create_directories(target.parent_path());
    io::write_file(target.string(), content);
    files.push_back({relative, io::sha256_hex(content), content.size()});
  }

  Json manifest_entry() const {
    auto sorted = files;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
    Json list = Json::array();
    for (const auto& f : sorted) list.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    return Json{{"files", list}};
  }
};

/// manifest.json holds one entry per command run into the directory. Entries
/// from a different resolved config are discarded.
inline void write_manifest(const OutputBundle& bundle) {
  const fs::path path = bundle.root / "manifest.json";
  Json manifest;
  if (fs::exists(path)) {
    try {
      manifest = Json::parse(io::read_file(path.string()));
    } catch (const Json::exception&) {
      manifest = Json();
    }
    if (!manifest.is_object() || manifest.value("config", Json()) != bundle.resolved_config) manifest = Json();
  }
  if (manifest.is_null())
    manifest = Json{{"schema_version", 1}, {"generator", kGenerator}, {"config", bundle.resolved_config},
                    {"commands", Json::object()}};
  manifest["commands"][bundle.command] = bundle.manifest_entry();
  io::write_file(path.string(), manifest.dump(2) + "\n");
}

/// Checks every file listed in a manifest against its recorded hash; returns
/// the paths that are missing or differ.
inline std::vector<std::string> verify_manifest(const fs::path& root) {
  const Json manifest = Json::parse(io::read_file((root / "manifest.json").string()));
  std::vector<std::string> bad;
  for (const auto& [command, entry] : manifest.at("commands").items()) {
    for (const auto& f : entry.at("files")) {
      const std::string rel = f.at("path").get<std::string>();
      const fs::path p = root / rel;
      if (!fs::exists(p) || io::sha256_hex(io::read_file(p.string())) != f.at("sha256").get<std::string>())
        bad.push_back(rel);
    }
  }
  return bad;
}

/// Runs fn(i) for i in [0, count) on up to `jobs` threads; rethrows the first
/// failure in index order.
inline void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct Job {
  Strategy strategy;
  BlockSchedule schedule;

  std::string name() const { return std::string(to_string(strategy)) + "_" + schedule.label(); }
};

/// Grids and per-schedule models shared by all commands of one run.
class Context {
 public:
  explicit Context(io::RunConfig config)
      : config_(std::move(config)),
        grids_{std::make_shared<const EGrid>(EGrid::build(config_.design.alpha, config_.grid.size_log,
                                                          config_.grid.size_lin)),
               std::make_shared<const BetGrid>(BetGrid::standard())},
        base_(config_.design, grids_) {}

  const io::RunConfig& config() const { return config_; }
  const Model& base_model() const { return base_; }

  Model model_for(const BlockSchedule& schedule) const {
    DesignSpec spec = config_.design;
    if (!schedule.is_fully_sequential()) spec.blocks = schedule;
    return base_.with_spec(spec);
  }

  std::vector<Job> jobs() const {
    std::vector<Job> out;
    for (const auto& schedule : config_.schedules)
      for (Strategy s : config_.strategies) out.push_back({s, schedule});
    return out;
  }

 private:
  io::RunConfig config_;
  Grids grids_;
  Model base_;
};

inline std::vector<StrategySolution> solve_jobs(const Context& ctx, const std::vector<Job>& jobs, int threads) {
  std::vector<std::optional<StrategySolution>> slots(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t i) {
    slots[i] = solve_strategy(ctx.model_for(jobs[i].schedule), jobs[i].strategy, ctx.config().newton);
  });
  std::vector<StrategySolution> out;
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

inline std::string heatmap_csv(const PolicyTable& policy) {
  io::CsvWriter csv({"t", "grid_index", "e_value", "action_kind", "bet", "zone", "hz", "ahz"});
  const EGrid& grid = policy.e_grid();
  for (int t = policy.first_stage(); t < policy.n(); ++t) {
    for (StateIndex i = 0; i < static_cast<StateIndex>(grid.size()); ++i) {
      const Zone z = classify_zone({t, grid[i]}, policy.spec());
      const BetIndex code = policy.code(t, i);
      const bool stop = code == PolicyTable::kStop;
      csv.add(t, i, grid[i], stop ? "stop" : "bet", stop ? std::string() : io::format_double(policy.bet_grid()[code]),
              to_string(z), z == Zone::Hopeless ? 1 : 0, z == Zone::AlmostHopeless ? 1 : 0);
    }
  }
  return csv.str();
}

inline std::string bounds_csv(const DesignSpec& spec) {
  io::CsvWriter csv({"t", "hopeless_edge", "almost_hopeless_edge", "m_upper", "m_lower"});
  const DiagnosticBounds b = diagnostic_bounds(spec);
  for (int t = 0; t <= spec.n; ++t) {
    const int remaining = spec.n - t;
    const double ahz = remaining > 0 ? hopeless_edge(remaining - 1, spec.alpha, spec.theta0) : spec.threshold();
    csv.add(t, hopeless_edge(remaining, spec.alpha, spec.theta0), ahz, b.m_upper[t], b.m_lower[t]);
  }
  return csv.str();
}

inline std::string lagrange_csv(const LagrangeTrace& trace) {
  io::CsvWriter csv({"iteration", "lambda", "power_theta1", "ess_theta1"});
  for (std::size_t k = 0; k < trace.iterations.size(); ++k) {
    const auto& it = trace.iterations[k];
    csv.add(static_cast<int>(k + 1), it.lambda, it.power, it.ess);
  }
  return csv.str();
}

inline std::string policy_path(const Job& job, const char* ext) { return "policies/" + job.name() + ext; }

/// Solves every (strategy, schedule) pair and writes policy CSV/JSON,
/// heatmap data, Lagrangian traces and the bound overlays.
inline OutputBundle cmd_solve(const io::RunConfig& config, const fs::path& out, int threads = 1) {
  Context ctx(config);
  OutputBundle bundle{"solve", out, {}, io::to_json(config)};
  const auto jobs = ctx.jobs();
  const auto solutions = solve_jobs(ctx, jobs, threads);
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const PolicyTable& policy = solutions[k].policy;
    bundle.write(policy_path(jobs[k], ".csv"), io::policy_csv(policy));
    bundle.write(policy_path(jobs[k], ".json"), io::policy_sidecar(policy).dump(2) + "\n");
    bundle.write("heatmap/" + jobs[k].name() + ".csv", heatmap_csv(policy));
    if (solutions[k].trace) bundle.write("lagrange/" + jobs[k].name() + ".csv", lagrange_csv(*solutions[k].trace));
  }
  bundle.write("bounds.csv", bounds_csv(config.design));
  write_manifest(bundle);
  return bundle;
}

/// Policy for a job: re-imported from a previous `solve` in the same directory
/// when its sidecar matches the job's design, solved afresh otherwise.
inline PolicyTable policy_for(const Context& ctx, const Job& job, const fs::path& out) {
  const fs::path csv = out / policy_path(job, ".csv");
  const fs::path json = out / policy_path(job, ".json");
  const Model model = ctx.model_for(job.schedule);
  if (fs::exists(csv) && fs::exists(json)) {
    try {
      PolicyTable p = io::read_policy(csv.string(), json.string());
      if (p.strategy == to_string(job.strategy) && io::to_json(p.spec()) == io::to_json(model.spec()) &&
          p.e_grid() == model.e_grid())
        return p;
    } catch (const Error&) {
    }
  }
  return solve_strategy(model, job.strategy, ctx.config().newton).policy;
}

/// Exact OC curves under theta0 and theta1 for every (strategy, schedule),
/// plus a comparison table that includes the fixed-sample binomial test.
inline OutputBundle cmd_oc(const io::RunConfig& config, const fs::path& out, int threads = 1) {
  Context ctx(config);
  OutputBundle bundle{"oc", out, {}, io::to_json(config)};
  const auto jobs = ctx.jobs();
  struct Result {
    OCProfile h0, h1;
  };
  std::vector<std::optional<Result>> results(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t k) {
    const PolicyTable policy = policy_for(ctx, jobs[k], out);
    const Model model = ctx.model_for(jobs[k].schedule);
    results[k] = Result{forward_oc(policy, config.design.theta0, model.spec(), model.e_grid()),
                        forward_oc(policy, config.design.theta1, model.spec(), model.e_grid())};
  });

  io::CsvWriter summary({"strategy", "schedule", "final_power", "final_size", "ess_theta1", "ess_theta0",
                         "final_futility_theta0", "final_futility_theta1"});
  Json summary_json = Json::array();
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const auto& [h0, h1] = *results[k];
    bundle.write("oc/" + jobs[k].name() + ".csv", io::oc_csv(h0, h1));
    Json s = io::oc_summary(h0, h1);
    s["strategy"] = std::string(to_string(jobs[k].strategy));
    s["schedule"] = jobs[k].schedule.label();
    bundle.write("oc/" + jobs[k].name() + ".json", s.dump(2) + "\n");
    summary.add(to_string(jobs[k].strategy), jobs[k].schedule.label(), h1.final_rejection(), h0.final_rejection(),
                h1.ess, h0.ess, h0.final_futility(), h1.final_futility());
    summary_json.push_back(std::move(s));
  }
  const BinomialBaseline binomial(config.design);
  const double n = config.design.n;
  summary.add("binomial", "fixed", binomial.power_at(config.design.theta1), binomial.power_at(config.design.theta0),
              n, n, 0.0, 0.0);
  bundle.write("oc/summary.csv", summary.str());
  bundle.write("oc/summary.json",
               Json{{"schema_version", 1},
                    {"designs", summary_json},
                    {"binomial",
                     {{"critical_value", binomial.critical_value()},
                      {"final_power", binomial.power_at(config.design.theta1)},
                      {"final_size", binomial.power_at(config.design.theta0)}}}}
                       .dump(2) + "\n");
  write_manifest(bundle);
  return bundle;
}

inline std::string path_csv(const SimulatedPath& path, std::span<const int> outcomes) {
  io::CsvWriter csv({"t", "outcome", "bet", "e_value", "zone", "continuous_e_value", "active", "stop_reason"});
  const int stop = path.stop_time;
  for (int t = 0; t <= static_cast<int>(outcomes.size()); ++t) {
    const int s = std::min(t, stop);
    const std::string outcome = t == 0 ? std::string() : std::to_string(outcomes[t - 1]);
    const std::string bet = (t >= 1 && t <= stop) ? io::format_double(path.continuous.bets[t - 1]) : std::string();
    const std::string reason = t == stop ? std::string(to_string(path.stop_reason)) : std::string();
    csv.add(t, outcome, bet, path.discrete[s], to_string(path.zones[s]), path.continuous.evalues[s],
            t <= stop ? 1 : 0, reason);
  }
  return csv.str();
}

/// Seeded sample paths under theta0 and theta1. For a given seed and theta all
/// strategies see the same outcome sequence.
inline OutputBundle cmd_paths(const io::RunConfig& config, const fs::path& out, int threads = 1) {
  Context ctx(config);
  OutputBundle bundle{"paths", out, {}, io::to_json(config)};
  if (!config.seeds.empty()) {
    const auto jobs = ctx.jobs();
    std::vector<std::optional<PolicyTable>> policies(jobs.size());
    parallel_for(jobs.size(), threads, [&](std::size_t k) { policies[k] = policy_for(ctx, jobs[k], out); });
    const std::pair<const char*, double> thetas[] = {{"theta0", config.design.theta0},
                                                     {"theta1", config.design.theta1}};
    for (std::uint64_t seed : config.seeds) {
      for (const auto& [tag, theta] : thetas) {
        const auto outcomes = OutcomeStream::outcomes(seed, config.design.n, theta);
        for (std::size_t k = 0; k < jobs.size(); ++k) {
          const SimulatedPath path = replay_policy(*policies[k], outcomes);
          bundle.write("paths/seed" + std::to_string(seed) + "/" + jobs[k].name() + "_" + tag + ".csv",
                       path_csv(path, outcomes));
        }
      }
    }
  }
  write_manifest(bundle);
  return bundle;
}

inline OutputBundle cmd_grid_dump(const io::RunConfig& config, const fs::path& out) {
  Context ctx(config);
  OutputBundle bundle{"grid-dump", out, {}, io::to_json(config)};
  const auto dump = [](std::span<const double> values) {
    io::CsvWriter csv({"index", "value"});
    for (std::size_t i = 0; i < values.size(); ++i) csv.add(static_cast<int>(i), values[i]);
    return csv.str();
  };
  bundle.write("grid/e_grid.csv", dump(ctx.base_model().e_grid().values()));
  bundle.write("grid/bet_grid.csv", dump(ctx.base_model().bet_grid().values()));
  write_manifest(bundle);
  return bundle;
}

}  // namespace edesign::cli
