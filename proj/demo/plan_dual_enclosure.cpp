// Plans on the two-enclosure problem and prints every solution improvement.
//   bitstar_demo [dimension] [budget seconds] [seed]

#include "bitstar/bench/scenarios.hpp"
#include "bitstar/planner/bitstar.hpp"

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 2;
  const double budget_s = argc > 2 ? std::strtod(argv[2], nullptr) : 1.0;
  const std::uint64_t seed = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 0;

  const bitstar::Scenario scenario = bitstar::gen_dual_enclosure(n);
  bitstar::BitstarPlanner planner(scenario.problem, bitstar::BitstarConfig{}, seed);
  bitstar::Budget budget;
  budget.time_s = budget_s;
  const auto result = planner.solve(budget, [](double t, double cost, const auto& path) {
    std::cout << t << " s: cost " << cost << " (" << path.size() << " waypoints)\n";
  });
  for (const auto& [name, value] : result.counters) std::cout << name << " = " << value << "\n";
  return result.solved ? 0 : 2;
}
