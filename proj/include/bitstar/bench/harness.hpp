#pragma once

// Seeded, time-budgeted trials and their aggregation into median cost versus
// time with a nonparametric confidence interval.

#include "bitstar/planners.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace bitstar {

struct TrialEvent {
  double time_s = 0.0;
  double cost = kInfinity;
  std::size_t waypoints = 0;
};

struct TrialRecord {
  std::string planner;
  std::uint64_t seed = 0;
  bool solved = false;
  double cost = kInfinity;
  std::vector<TrialEvent> events;
  std::vector<StateVec> path;
  Counters counters;
};

/// Runs one planner once and records every improvement.
inline TrialRecord run_trial(const ProblemDef& problem, const std::string& planner,
                             const PlannerOptions& options, std::uint64_t seed,
                             const Budget& budget) {
  if (!is_planner_name(planner)) {
    throw std::invalid_argument("planner: unknown planner '" + planner + "' (valid: " +
                                planner_names_joined() + ")");
  }
  TrialRecord record;
  record.planner = planner;
  record.seed = seed;
  const PlanResult result =
      solve(planner, problem, options, seed, budget,
            [&](double t, double cost, const std::vector<StateVec>& path) {
              record.events.push_back({t, cost, path.size()});
            });
  record.solved = !record.events.empty();
  record.cost = record.solved ? record.events.back().cost : kInfinity;
  record.path = result.path;
  record.counters = result.counters;
  return record;
}

/// True iff event costs strictly decrease and times never go backwards.
inline bool events_monotone(const std::vector<TrialEvent>& events) {
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (!(events[i].cost < events[i - 1].cost)) return false;
    if (events[i].time_s < events[i - 1].time_s) return false;
  }
  return true;
}

/// Cost of a trial at time t: the last event at or before t, else infinity.
inline double cost_at(const TrialRecord& trial, double t) {
  double cost = kInfinity;
  for (const TrialEvent& e : trial.events) {
    if (e.time_s > t) break;
    cost = e.cost;
  }
  return cost;
}

/// 1-based order-statistic indices bounding the median of n samples with the
/// given two-sided confidence: the largest k with P(B < k) <= alpha/2 and the
/// smallest j with P(B >= j) <= alpha/2 for B ~ Binomial(n, 1/2). Clamped to
/// [1, n] when n is too small for the requested level.
struct MedianInterval {
  std::size_t lower = 1;
  std::size_t upper = 1;
};

inline MedianInterval median_ci_indices(std::size_t n, double confidence = 0.99) {
  if (n == 0) throw std::invalid_argument("median_ci_indices: n must be >= 1");
  const double tail = (1.0 - confidence) / 2.0;
  // pmf[i] = P(B = i), computed in log space.
  std::vector<double> pmf(n + 1);
  const double nd = static_cast<double>(n);
  for (std::size_t i = 0; i <= n; ++i) {
    const double id = static_cast<double>(i);
    pmf[i] = std::exp(std::lgamma(nd + 1) - std::lgamma(id + 1) - std::lgamma(nd - id + 1) -
                      nd * std::log(2.0));
  }
  MedianInterval out;
  double below = 0.0;  // P(B < k)
  for (std::size_t k = 1; k <= n; ++k) {
    below += pmf[k - 1];
    if (below <= tail) out.lower = k;
  }
  out.upper = n;
  double at_least = 0.0;  // P(B >= j)
  for (std::size_t j = n; j >= 1; --j) {
    at_least += pmf[j];
    if (at_least <= tail) out.upper = j;
    else break;
  }
  return out;
}

struct AggregateSeries {
  std::string planner;
  std::vector<double> time;
  std::vector<double> median;
  std::vector<double> ci_lo;
  std::vector<double> ci_hi;
  std::vector<double> success;
  /// False where the median is infinite.
  std::vector<char> plottable;
};

/// Median of sorted values; the mean of the two middle values for even counts.
inline double sorted_median(const std::vector<double>& sorted) {
  const std::size_t n = sorted.size();
  if (n % 2 == 1) return sorted[n / 2];
  const double a = sorted[n / 2 - 1];
  const double b = sorted[n / 2];
  if (a == kInfinity || b == kInfinity) return kInfinity;
  return 0.5 * (a + b);
}

/// Step-interpolates each trial on the grid t_k = k * period, k = 0..K with
/// K = floor(horizon / period), and reduces across trials.
inline AggregateSeries aggregate(const std::vector<TrialRecord>& trials, double period, double horizon) {
  if (trials.empty()) throw std::invalid_argument("aggregate: no trials");
  if (!(period > 0.0)) throw std::invalid_argument("aggregate: period must be > 0");
  if (!(horizon >= 0.0)) throw std::invalid_argument("aggregate: horizon must be >= 0");
  const auto steps = static_cast<std::size_t>(std::floor(horizon / period + 1e-9));
  const std::size_t n = trials.size();
  const MedianInterval ci = median_ci_indices(n);

  AggregateSeries out;
  out.planner = trials.front().planner;
  std::vector<std::size_t> cursor(n, 0);
  std::vector<double> current(n, kInfinity);
  std::vector<double> sorted(n);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * period;
    std::size_t solved = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& events = trials[i].events;
      while (cursor[i] < events.size() && events[cursor[i]].time_s <= t) {
        current[i] = events[cursor[i]].cost;
        ++cursor[i];
      }
      sorted[i] = current[i];
      if (current[i] < kInfinity) ++solved;
    }
    std::sort(sorted.begin(), sorted.end());
    const double med = sorted_median(sorted);
    out.time.push_back(t);
    out.median.push_back(med);
    out.ci_lo.push_back(sorted[ci.lower - 1]);
    out.ci_hi.push_back(sorted[ci.upper - 1]);
    out.success.push_back(static_cast<double>(solved) / static_cast<double>(n));
    out.plottable.push_back(med < kInfinity ? 1 : 0);
  }
  return out;
}

/// Median of the final costs (infinite for unsolved trials).
inline double median_final_cost(const std::vector<TrialRecord>& trials) {
  if (trials.empty()) throw std::invalid_argument("median_final_cost: no trials");
  std::vector<double> costs;
  costs.reserve(trials.size());
  for (const auto& t : trials) costs.push_back(t.cost);
  std::sort(costs.begin(), costs.end());
  return sorted_median(costs);
}

}  // namespace bitstar
