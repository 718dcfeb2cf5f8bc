#pragma once

#include "bitstar/core/geometry.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bitstar {

/// When to stop an anytime planner. The time limit is wall-clock on a
/// monotonic clock, checked at queue-operation granularity.
struct Budget {
  double time_s = 1.0;
  std::optional<double> target_cost;
  bool stop_on_first_solution = false;
  /// Deterministic cap on planner iterations (queue operations for BIT*).
  std::optional<std::uint64_t> max_iterations;
};

using Counters = std::map<std::string, std::uint64_t>;

struct PlanResult {
  bool solved = false;
  double cost = kInfinity;
  std::vector<StateVec> path;
  Counters counters;
};

/// Invoked synchronously on every improvement of the best solution cost.
using ProgressCallback =
    std::function<void(double elapsed_s, double cost, const std::vector<StateVec>& path)>;

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_s() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

/// Shared stop logic for the anytime loops.
class StopCheck {
 public:
  explicit StopCheck(const Budget& budget) : budget_(budget) {}

  double elapsed_s() const { return clock_.elapsed_s(); }

  bool should_stop(double best_cost, std::uint64_t iterations) const {
    if (!(budget_.time_s > 0.0)) return true;
    if (budget_.stop_on_first_solution && best_cost < kInfinity) return true;
    if (budget_.target_cost && best_cost <= *budget_.target_cost) return true;
    if (budget_.max_iterations && iterations >= *budget_.max_iterations) return true;
    return clock_.elapsed_s() >= budget_.time_s;
  }

 private:
  Budget budget_;
  Stopwatch clock_;
};

}  // namespace bitstar
