#pragma once

// Benchmark problem generators: two enclosures around start and goal, a
// regular obstacle lattice with many homotopy classes, and seeded random
// box worlds.

#include "bitstar/core/geometry.hpp"
#include "bitstar/sampling/informed.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace bitstar {

enum class ScenarioFamily { kDualEnclosure, kHomotopyGrid, kRandomWorld, kCustom };

inline std::string family_name(ScenarioFamily f) {
  switch (f) {
    case ScenarioFamily::kDualEnclosure: return "dual_enclosure";
    case ScenarioFamily::kHomotopyGrid: return "homotopy_grid";
    case ScenarioFamily::kRandomWorld: return "random_world";
    case ScenarioFamily::kCustom: return "custom";
  }
  return "custom";
}

inline ScenarioFamily parse_family(const std::string& s) {
  if (s == "dual_enclosure") return ScenarioFamily::kDualEnclosure;
  if (s == "homotopy_grid") return ScenarioFamily::kHomotopyGrid;
  if (s == "random_world") return ScenarioFamily::kRandomWorld;
  if (s == "custom") return ScenarioFamily::kCustom;
  throw std::invalid_argument("family: unknown family '" + s +
                              "' (expected dual_enclosure, homotopy_grid or random_world)");
}

struct Scenario {
  std::string name;
  ScenarioFamily family = ScenarioFamily::kCustom;
  std::uint64_t world_seed = 0;
  ProblemDef problem;
};

namespace detail {

inline void require_min_dimension(std::size_t n, const char* what) {
  if (n < 2) throw std::invalid_argument(std::string(what) + ": dimension must be >= 2");
}

inline StateVec filled(std::size_t n, double v) { return StateVec::Constant(static_cast<Eigen::Index>(n), v); }

inline StateVec on_first_axis(std::size_t n, double x0) {
  StateVec x = StateVec::Zero(static_cast<Eigen::Index>(n));
  x[0] = x0;
  return x;
}

}  // namespace detail

struct DualEnclosureParams {
  double width = 2.8;
  double wall = 0.1;
  double opening = 0.6;
};

/// Hypercube of width 2.8 with start (-0.5, 0, ...) and goal (0.5, 0, ...),
/// each inside a box enclosure with walls of thickness 0.1 and a square
/// opening of width 0.6 in the wall facing away from the other enclosure.
/// The corridors around the enclosures are as wide as the openings.
inline Scenario gen_dual_enclosure(std::size_t n, const DualEnclosureParams& params = {}) {
  detail::require_min_dimension(n, "gen_dual_enclosure");
  const double half = params.width / 2.0;
  const double t = params.wall;
  const double hole = params.opening / 2.0;
  // Outer extent of each enclosure: a corridor of width `opening` to the bounds.
  const double outer = half - params.opening;
  const auto N = static_cast<Eigen::Index>(n);

  std::vector<AxisBox> obstacles;
  auto box = [&](StateVec lo, StateVec hi) { obstacles.emplace_back(std::move(lo), std::move(hi)); };

  for (const double side : {-1.0, 1.0}) {
    // Along the first axis the enclosure spans [near_x, far_x] (mirrored for the goal).
    const double near_x = side * 0.1;
    const double far_x = side * outer;
    const double x_lo = std::min(near_x, far_x);
    const double x_hi = std::max(near_x, far_x);

    StateVec lo = detail::filled(n, -outer);
    StateVec hi = detail::filled(n, outer);

    // Solid wall facing the other enclosure.
    lo[0] = side < 0 ? x_hi - t : x_lo;
    hi[0] = side < 0 ? x_hi : x_lo + t;
    box(lo, hi);

    // Outward wall with a square hole: for each other axis j, two slabs on
    // either side of the hole, with axes before j restricted to the hole.
    const double wall_lo = side < 0 ? x_lo : x_hi - t;
    const double wall_hi = side < 0 ? x_lo + t : x_hi;
    for (Eigen::Index j = 1; j < N; ++j) {
      for (const double s : {-1.0, 1.0}) {
        StateVec a = detail::filled(n, -outer);
        StateVec b = detail::filled(n, outer);
        a[0] = wall_lo;
        b[0] = wall_hi;
        for (Eigen::Index k = 1; k < j; ++k) {
          a[k] = -hole;
          b[k] = hole;
        }
        a[j] = s < 0 ? -outer : hole;
        b[j] = s < 0 ? -hole : outer;
        box(a, b);
      }
    }

    // Side walls.
    for (Eigen::Index j = 1; j < N; ++j) {
      for (const double s : {-1.0, 1.0}) {
        StateVec a = detail::filled(n, -outer);
        StateVec b = detail::filled(n, outer);
        a[0] = x_lo;
        b[0] = x_hi;
        a[j] = s < 0 ? -outer : outer - t;
        b[j] = s < 0 ? -outer + t : outer;
        box(a, b);
      }
    }
  }

  AxisBox bounds(detail::filled(n, -half), detail::filled(n, half));
  ProblemDef problem(std::move(bounds), std::move(obstacles), detail::on_first_axis(n, -0.5),
                     {detail::on_first_axis(n, 0.5)});
  return {"dual_enclosure_r" + std::to_string(n), ScenarioFamily::kDualEnclosure, 0, std::move(problem)};
}

/// A collision-free path through both enclosure openings in the plane of the
/// first two axes.
inline std::vector<StateVec> dual_enclosure_reference_path(std::size_t n) {
  auto at = [n](double x, double y) {
    StateVec p = StateVec::Zero(static_cast<Eigen::Index>(n));
    p[0] = x;
    p[1] = y;
    return p;
  };
  return {at(-0.5, 0.0), at(-1.1, 0.0), at(-1.1, 1.1), at(1.1, 1.1), at(1.1, 0.0), at(0.5, 0.0)};
}

struct HomotopyGridParams {
  double width = 4.0;
  /// Column spacing; columns sit at multiples of the pitch along the first axis.
  double pitch = 0.2;
  /// Gap between neighbouring obstacles divided by the obstacle width.
  double gap_ratio = 1.0;
};

/// Hypercube of width 4 filled with a lattice of square obstacles. Columns sit
/// at x = k * pitch, so start and goal are separated by five columns; blocks in
/// odd columns are shifted by half a pitch. Obstacles span every axis beyond
/// the second.
inline Scenario gen_homotopy_grid(std::size_t n, const HomotopyGridParams& params = {}) {
  detail::require_min_dimension(n, "gen_homotopy_grid");
  if (!(params.pitch > 0.0) || !(params.gap_ratio > 0.0)) {
    throw std::invalid_argument("gen_homotopy_grid: pitch and gap_ratio must be > 0");
  }
  const double half = params.width / 2.0;
  const double w = params.pitch / (1.0 + params.gap_ratio);
  const auto columns = static_cast<int>(std::floor(half / params.pitch + 0.5));

  std::vector<AxisBox> obstacles;
  for (int k = -columns; k <= columns; ++k) {
    const double cx = k * params.pitch;
    const double offset = (k % 2 == 0) ? 0.0 : params.pitch / 2.0;
    for (int j = -columns - 1; j <= columns; ++j) {
      const double cy = j * params.pitch + offset;
      StateVec lo = detail::filled(n, -half);
      StateVec hi = detail::filled(n, half);
      lo[0] = std::max(-half, cx - w / 2.0);
      hi[0] = std::min(half, cx + w / 2.0);
      lo[1] = std::max(-half, cy - w / 2.0);
      hi[1] = std::min(half, cy + w / 2.0);
      if (!(hi[0] > lo[0]) || !(hi[1] > lo[1])) continue;
      obstacles.emplace_back(std::move(lo), std::move(hi));
    }
  }
  AxisBox bounds(detail::filled(n, -half), detail::filled(n, half));
  ProblemDef problem(std::move(bounds), std::move(obstacles), detail::on_first_axis(n, -0.5),
                     {detail::on_first_axis(n, 0.5)});
  return {"homotopy_grid_r" + std::to_string(n), ScenarioFamily::kHomotopyGrid, 0, std::move(problem)};
}

struct RandomWorldParams {
  double width = 2.0;
  std::size_t max_obstacles = 75;
  /// Obstacles stop before their total measure exceeds this share of the space.
  double max_fraction = 1.0 / 3.0;
};

/// Hypercube of width 2 with up to 75 random boxes covering at most a third
/// of the space. Box sides are uniform in [0.5, 1.5] times the side of a cube
/// holding 1/225 of the space, so 75 average boxes fill about a third.
inline Scenario gen_random_world(std::size_t n, std::uint64_t world_seed,
                                 const RandomWorldParams& params = {}) {
  detail::require_min_dimension(n, "gen_random_world");
  const double half = params.width / 2.0;
  AxisBox bounds(detail::filled(n, -half), detail::filled(n, half));
  const StateVec start = detail::on_first_axis(n, -0.5);
  const StateVec goal = detail::on_first_axis(n, 0.5);
  const double budget = params.max_fraction * bounds.measure();
  const double base = params.width * std::pow(1.0 / 225.0, 1.0 / static_cast<double>(n));

  Rng rng(world_seed);
  std::vector<AxisBox> obstacles;
  double used = 0.0;
  const std::size_t max_attempts = 100 * params.max_obstacles;
  for (std::size_t attempt = 0; attempt < max_attempts && obstacles.size() < params.max_obstacles;
       ++attempt) {
    StateVec lo(static_cast<Eigen::Index>(n));
    StateVec hi(static_cast<Eigen::Index>(n));
    for (Eigen::Index d = 0; d < static_cast<Eigen::Index>(n); ++d) {
      const double side = std::min(params.width, base * rng.uniform(0.5, 1.5));
      lo[d] = rng.uniform(-half, half - side);
      hi[d] = lo[d] + side;
    }
    AxisBox candidate(lo, hi);
    if (candidate.contains(start) || candidate.contains(goal)) continue;
    if (used + candidate.measure() > budget) break;
    used += candidate.measure();
    obstacles.push_back(std::move(candidate));
  }
  ProblemDef problem(std::move(bounds), std::move(obstacles), start, {goal});
  return {"random_world_r" + std::to_string(n) + "_s" + std::to_string(world_seed),
          ScenarioFamily::kRandomWorld, world_seed, std::move(problem)};
}

/// Obstacle-free hypercube of width 2 with start and goal one unit apart.
inline Scenario gen_empty_world(std::size_t n) {
  detail::require_min_dimension(n, "gen_empty_world");
  AxisBox bounds(detail::filled(n, -1.0), detail::filled(n, 1.0));
  ProblemDef problem(std::move(bounds), {}, detail::on_first_axis(n, -0.5),
                     {detail::on_first_axis(n, 0.5)});
  return {"empty_r" + std::to_string(n), ScenarioFamily::kCustom, 0, std::move(problem)};
}

inline Scenario gen_scenario(ScenarioFamily family, std::size_t n, std::uint64_t world_seed = 0) {
  switch (family) {
    case ScenarioFamily::kDualEnclosure: return gen_dual_enclosure(n);
    case ScenarioFamily::kHomotopyGrid: return gen_homotopy_grid(n);
    case ScenarioFamily::kRandomWorld: return gen_random_world(n, world_seed);
    case ScenarioFamily::kCustom: break;
  }
  throw std::invalid_argument("family: custom scenarios are read from files");
}

}  // namespace bitstar
