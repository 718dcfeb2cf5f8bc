#pragma once

// Command-line front end: plan, bench, gen and inspect.
// Exit codes: 0 success, 1 usage or input error, 2 no solution within budget.

#include "bitstar/bench/harness.hpp"
#include "bitstar/bench/io.hpp"
#include "bitstar/bench/scenarios.hpp"
#include "bitstar/planners.hpp"

#include "CLI11.hpp"

#include <atomic>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace bitstar::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNoSolution = 2;

struct CliConfig {
  std::string problem_file;
  std::vector<std::string> planners{"bitstar"};
  double budget_s = 1.0;
  std::size_t trials = 10;
  std::uint64_t seed = 0;
  std::size_t batch_size = 100;
  bool delayed_rewiring = true;
  bool jit = false;
  bool sample_removal = false;
  std::string out;
  double period_s = 1e-4;
  std::size_t dimension = 2;
  std::string family = "dual_enclosure";
  std::uint64_t world_seed = 0;
  std::size_t jobs = 1;
  bool dump_tree = false;
};

inline PlannerOptions options_from(const CliConfig& cfg) {
  PlannerOptions opts;
  opts.bitstar.batch_size = cfg.batch_size;
  opts.bitstar.delayed_rewiring = cfg.delayed_rewiring;
  opts.bitstar.jit_sampling = cfg.jit;
  opts.bitstar.sample_removal = cfg.sample_removal;
  opts.rrt.batch_size = cfg.batch_size;
  return opts;
}

inline Scenario load_problem(const std::string& path) {
  return scenario_from_json(read_json_file(path));
}

/// Splits comma-separated planner lists and checks every name.
inline std::vector<std::string> normalize_planners(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const auto& item : raw) {
    std::stringstream ss(item);
    std::string name;
    while (std::getline(ss, name, ',')) {
      if (name.empty()) continue;
      if (!is_planner_name(name)) {
        throw std::invalid_argument("planner: unknown planner '" + name + "' (valid: " +
                                    planner_names_joined() + ")");
      }
      out.push_back(name);
    }
  }
  if (out.empty()) throw std::invalid_argument("planner: at least one planner is required");
  return out;
}

inline int cmd_plan(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!(cfg.budget_s > 0.0)) throw std::invalid_argument("budget-s: must be > 0");
  const Scenario scenario = load_problem(cfg.problem_file);
  const std::vector<std::string> planners = normalize_planners(cfg.planners);
  if (planners.size() != 1) throw std::invalid_argument("planner: plan takes exactly one planner");
  const std::string& name = planners.front();
  const PlannerOptions opts = options_from(cfg);
  Budget budget;
  budget.time_s = cfg.budget_s;

  PlanResult result;
  Json doc;
  if (name == "bitstar") {
    BitstarPlanner planner(scenario.problem, opts.bitstar, cfg.seed);
    result = planner.solve(budget);
    if (cfg.dump_tree) doc["tree"] = tree_to_json(planner.tree_snapshot());
  } else {
    result = solve(name, scenario.problem, opts, cfg.seed, budget);
  }
  doc["planner"] = name;
  doc["seed"] = cfg.seed;
  doc["problem"] = scenario.name;
  doc["solved"] = result.solved;
  doc["cost"] = io_detail::write_cost(result.cost);
  doc["path"] = path_to_json(result.path);
  doc["counters"] = counters_to_json(result.counters);

  if (cfg.out.empty()) {
    out << doc.dump(2) << "\n";
  } else {
    write_json_file(cfg.out, doc);
  }
  if (!result.solved) {
    err << "no solution found within " << cfg.budget_s << " s\n";
    return kExitNoSolution;
  }
  return kExitOk;
}

/// Runs `trials` seeds per planner, in parallel across `jobs` workers;
/// results are stored by seed so the output does not depend on scheduling.
inline std::vector<TrialRecord> run_trials(const ProblemDef& problem, const std::string& planner,
                                           const PlannerOptions& opts, std::uint64_t seed_base,
                                           std::size_t trials, const Budget& budget,
                                           std::size_t jobs) {
  std::vector<TrialRecord> records(trials);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < trials; i = next++) {
      records[i] = run_trial(problem, planner, opts, seed_base + i, budget);
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, trials));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return records;
}

inline int cmd_bench(const CliConfig& cfg, std::ostream& out, std::ostream&) {
  if (cfg.trials < 1) throw std::invalid_argument("trials: must be >= 1");
  if (!(cfg.budget_s > 0.0)) throw std::invalid_argument("budget-s: must be > 0");
  if (!(cfg.period_s > 0.0)) throw std::invalid_argument("period-s: must be > 0");
  const std::vector<std::string> planners = normalize_planners(cfg.planners);
  const Scenario scenario = cfg.problem_file.empty()
                                ? gen_scenario(parse_family(cfg.family), cfg.dimension, cfg.world_seed)
                                : load_problem(cfg.problem_file);
  const std::string dir = cfg.out.empty() ? "bench_out" : cfg.out;
  std::filesystem::create_directories(std::filesystem::path(dir) / "trials");
  const PlannerOptions opts = options_from(cfg);
  Budget budget;
  budget.time_s = cfg.budget_s;

  for (const std::string& planner : planners) {
    const auto records = run_trials(scenario.problem, planner, opts, cfg.seed, cfg.trials, budget, cfg.jobs);
    std::size_t solved = 0;
    for (const auto& r : records) {
      solved += r.solved ? 1 : 0;
      const auto file = std::filesystem::path(dir) / "trials" /
                        (planner + "_seed" + std::to_string(r.seed) + ".json");
      write_json_file(file.string(), trial_to_json(r));
    }
    const AggregateSeries series = aggregate(records, cfg.period_s, cfg.budget_s);
    write_text_file((std::filesystem::path(dir) / (planner + "_aggregate.csv")).string(),
                    aggregate_to_csv(series));
    const double med = median_final_cost(records);
    out << planner << ": solved " << solved << "/" << records.size() << ", median final cost ";
    if (std::isinf(med)) {
      out << "inf";
    } else {
      out << med;
    }
    out << "\n";
  }
  return kExitOk;
}

inline int cmd_gen(const CliConfig& cfg, std::ostream& out, std::ostream&) {
  const Scenario scenario = gen_scenario(parse_family(cfg.family), cfg.dimension, cfg.world_seed);
  const Json doc = scenario_to_json(scenario);
  if (cfg.out.empty()) {
    out << doc.dump(2) << "\n";
  } else {
    write_json_file(cfg.out, doc);
  }
  return kExitOk;
}

/// Fraction of the bounds not covered by obstacles, estimated from a fixed
/// number of uniform samples with a fixed seed.
inline double free_fraction_estimate(const ProblemDef& p, std::size_t samples = 100000) {
  Rng rng(12345);
  std::size_t free = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    if (p.is_state_valid(sample_uniform_box(rng, p.bounds()))) ++free;
  }
  return static_cast<double>(free) / static_cast<double>(samples);
}

inline int cmd_inspect(const CliConfig& cfg, std::ostream& out, std::ostream&) {
  const Json doc = read_json_file(cfg.problem_file);
  if (doc.is_object() && doc.contains("events")) {
    const TrialRecord t = trial_from_json(doc);
    out << "kind: trial\n"
        << "planner: " << t.planner << "\n"
        << "seed: " << t.seed << "\n"
        << "solved: " << (t.solved ? "true" : "false") << "\n"
        << "events: " << t.events.size() << "\n"
        << "final_cost: " << (std::isinf(t.cost) ? std::string("inf") : std::to_string(t.cost)) << "\n"
        << "monotone: " << (events_monotone(t.events) ? "true" : "false") << "\n";
    return kExitOk;
  }
  const Scenario s = scenario_from_json(doc);
  const ProblemDef& p = s.problem;
  bool straight = false;
  for (const auto& g : p.goals()) straight = straight || p.is_segment_free(p.start(), g);
  const double fraction = free_fraction_estimate(p);
  out << "kind: problem\n"
      << "name: " << s.name << "\n"
      << "family: " << family_name(s.family) << "\n"
      << "dimension: " << p.dimension() << "\n"
      << "obstacles: " << p.obstacles().size() << "\n"
      << "goals: " << p.goals().size() << "\n"
      << "free_fraction_estimate: " << fraction << "\n"
      << "free_measure_estimate: " << fraction * p.bounds().measure() << "\n"
      << "straight_line_feasible: " << (straight ? "true" : "false") << "\n";
  return kExitOk;
}

/// Parses arguments and dispatches. Never throws; errors map to exit codes.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Batch Informed Trees planning and benchmarking"};
  app.require_subcommand(1);
  CliConfig cfg;

  auto add_planner_flags = [&](CLI::App* sub) {
    sub->add_option("--planner", cfg.planners, "Planner name(s): " + planner_names_joined())
        ->delimiter(',');
    sub->add_option("--budget-s", cfg.budget_s, "Time budget per run in seconds");
    sub->add_option("--seed", cfg.seed, "Seed (base seed for bench)");
    sub->add_option("--batch-size", cfg.batch_size, "Samples per batch")->check(CLI::PositiveNumber);
    sub->add_flag("--delayed-rewiring,!--no-delayed-rewiring", cfg.delayed_rewiring,
                  "Delay rewiring until a solution exists (default on)");
    sub->add_flag("--jit", cfg.jit, "Just-in-time sampling");
    sub->add_flag("--sample-removal", cfg.sample_removal, "Drop unconnected samples when pruning");
  };

  CLI::App* plan = app.add_subcommand("plan", "Run one planner on a problem file");
  plan->add_option("problem", cfg.problem_file, "Problem file")->required();
  add_planner_flags(plan);
  plan->add_option("--out", cfg.out, "Output file (default stdout)");
  plan->add_flag("--tree", cfg.dump_tree, "Include the search tree (bitstar only)");

  CLI::App* bench = app.add_subcommand("bench", "Run seeded trials and aggregate cost versus time");
  bench->add_option("problem", cfg.problem_file, "Problem file (default: generate from --family)");
  add_planner_flags(bench);
  bench->add_option("--trials", cfg.trials, "Trials per planner")->check(CLI::PositiveNumber);
  bench->add_option("--out", cfg.out, "Output directory");
  bench->add_option("--period-s", cfg.period_s, "Aggregation grid period in seconds");
  bench->add_option("--dimension", cfg.dimension, "Dimension of a generated scenario");
  bench->add_option("--family", cfg.family, "Generated scenario family");
  bench->add_option("--world-seed", cfg.world_seed, "Seed of a random world");
  bench->add_option("--jobs", cfg.jobs, "Parallel trials")->check(CLI::PositiveNumber);

  CLI::App* gen = app.add_subcommand("gen", "Write a generated scenario");
  gen->add_option("--family", cfg.family, "dual_enclosure, homotopy_grid or random_world");
  gen->add_option("--dimension", cfg.dimension, "State dimension");
  gen->add_option("--world-seed", cfg.world_seed, "Seed of a random world");
  gen->add_option("--out", cfg.out, "Output file (default stdout)");

  CLI::App* inspect = app.add_subcommand("inspect", "Summarize a problem or trial file");
  inspect->add_option("file", cfg.problem_file, "Problem or trial file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (plan->parsed()) return cmd_plan(cfg, out, err);
    if (bench->parsed()) return cmd_bench(cfg, out, err);
    if (gen->parsed()) return cmd_gen(cfg, out, err);
    if (inspect->parsed()) return cmd_inspect(cfg, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace bitstar::cli
