#pragma once

// Uniform entry point over every planner, selected by name.

#include "bitstar/baselines/rrt.hpp"
#include "bitstar/planner/bitstar.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bitstar {

struct PlannerOptions {
  BitstarConfig bitstar;
  RrtConfig rrt;
  /// Overrides the dimension-dependent default maximum edge length of the
  /// RRT family.
  std::optional<double> steer_length;
};

inline const std::vector<std::string>& planner_names() {
  static const std::vector<std::string> names = {"rrt",      "rrt_connect", "rrtstar",
                                                 "informed_rrtstar", "sorrtstar", "bitstar"};
  return names;
}

inline bool is_planner_name(const std::string& name) {
  for (const auto& n : planner_names()) {
    if (n == name) return true;
  }
  return false;
}

inline std::string planner_names_joined() {
  std::string out;
  for (const auto& n : planner_names()) {
    if (!out.empty()) out += ", ";
    out += n;
  }
  return out;
}

inline PlanResult solve(const std::string& name, const ProblemDef& problem,
                        const PlannerOptions& options, std::uint64_t seed, const Budget& budget,
                        const ProgressCallback& callback = {}) {
  if (name == "bitstar") return solve_bitstar(problem, options.bitstar, seed, budget, callback);
  RrtConfig rrt = options.rrt;
  rrt.max_edge_length = options.steer_length.value_or(default_steer_length(problem.dimension()));
  if (name == "rrt") return RrtPlanner(problem, rrt, seed).solve(budget, callback);
  if (name == "rrt_connect") return RrtConnectPlanner(problem, rrt, seed).solve(budget, callback);
  if (name == "rrtstar") {
    return RrtStarPlanner(problem, rrt, seed, RrtStarVariant::kPlain).solve(budget, callback);
  }
  if (name == "informed_rrtstar") {
    return RrtStarPlanner(problem, rrt, seed, RrtStarVariant::kInformed).solve(budget, callback);
  }
  if (name == "sorrtstar") {
    return RrtStarPlanner(problem, rrt, seed, RrtStarVariant::kSorted).solve(budget, callback);
  }
  throw std::invalid_argument("planner: unknown planner '" + name + "' (valid: " +
                              planner_names_joined() + ")");
}

}  // namespace bitstar
