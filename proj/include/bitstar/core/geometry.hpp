#pragma once

// Planning problem definition, exact collision checking against axis-aligned
// boxes, and the admissible L2 heuristics shared by every planner.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bitstar {

using StateVec = Eigen::VectorXd;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

namespace detail {

inline void require_dimension(const StateVec& x, std::size_t n, const char* what) {
  if (static_cast<std::size_t>(x.size()) != n) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (expected " +
                                std::to_string(n) + ", got " + std::to_string(x.size()) + ")");
  }
}

inline bool all_finite(const StateVec& x) { return x.allFinite(); }

}  // namespace detail

/// Closed axis-aligned box [lower, upper].
struct AxisBox {
  StateVec lower;
  StateVec upper;

  AxisBox() = default;
  AxisBox(StateVec lo, StateVec hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size()) {
      throw std::invalid_argument("AxisBox: lower/upper dimension mismatch");
    }
    if (!detail::all_finite(lower) || !detail::all_finite(upper)) {
      throw std::invalid_argument("AxisBox: non-finite coordinate");
    }
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
      if (lower[i] > upper[i]) {
        throw std::invalid_argument("AxisBox: lower > upper in coordinate " + std::to_string(i));
      }
    }
  }

  std::size_t dimension() const { return static_cast<std::size_t>(lower.size()); }

  bool contains(const StateVec& x) const {
    return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
  }

  /// Open interior; faces are not part of it.
  bool interior_contains(const StateVec& x) const {
    return (x.array() > lower.array()).all() && (x.array() < upper.array()).all();
  }

  double measure() const { return (upper - lower).prod(); }
};

/// True iff the closed segment [a, b] meets the open interior of `box`.
///
/// Slab clipping: each axis contributes an open parameter interval in which the
/// segment is strictly between the faces; the segment hits the interior iff the
/// intersection of those intervals with [0, 1] is nonempty.
inline bool segment_hits_interior(const StateVec& a, const StateVec& b, const AxisBox& box) {
  double t_enter = -kInfinity;
  double t_exit = kInfinity;
  const Eigen::Index n = a.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lo = box.lower[i];
    const double hi = box.upper[i];
    const double d = b[i] - a[i];
    if (d == 0.0) {
      if (!(a[i] > lo && a[i] < hi)) return false;
      continue;
    }
    double t0 = (lo - a[i]) / d;
    double t1 = (hi - a[i]) / d;
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
    if (!(t_enter < t_exit)) return false;
  }
  return t_enter < 1.0 && t_exit > 0.0 && t_enter < t_exit;
}

/// Uniform grid over the first (up to) two coordinates of the bounds. Each
/// obstacle is registered in every cell its projection overlaps.
class ObstacleGrid {
 public:
  ObstacleGrid() = default;

  ObstacleGrid(const AxisBox& bounds, const std::vector<AxisBox>& obstacles) {
    axes_ = std::min<std::size_t>(2, bounds.dimension());
    if (obstacles.size() < kBruteForceBelow || axes_ == 0) return;
    const auto per_axis = static_cast<std::size_t>(
        std::clamp(std::ceil(std::sqrt(static_cast<double>(obstacles.size()))), 1.0, 64.0));
    for (std::size_t d = 0; d < axes_; ++d) {
      origin_[d] = bounds.lower[static_cast<Eigen::Index>(d)];
      const double extent = bounds.upper[static_cast<Eigen::Index>(d)] - origin_[d];
      cells_[d] = extent > 0.0 ? per_axis : 1;
      width_[d] = extent > 0.0 ? extent / static_cast<double>(cells_[d]) : 1.0;
    }
    if (axes_ == 1) cells_[1] = 1;
    buckets_.assign(cells_[0] * cells_[1], {});
    box_cells_.reserve(obstacles.size());
    for (std::size_t k = 0; k < obstacles.size(); ++k) {
      const CellRange range = range_of(obstacles[k].lower, obstacles[k].upper);
      box_cells_.push_back(range);
      for (std::size_t i = range.lo[0]; i <= range.hi[0]; ++i) {
        for (std::size_t j = range.lo[1]; j <= range.hi[1]; ++j) {
          buckets_[i * cells_[1] + j].push_back(k);
        }
      }
    }
    enabled_ = true;
  }

  bool enabled() const { return enabled_; }

  /// Calls `visit(k)` once for every obstacle whose projected cells overlap
  /// the projected bounding box of [a, b]; stops early if `visit` returns true.
  template <class Visit>
  bool any_candidate(const StateVec& a, const StateVec& b, Visit&& visit) const {
    const StateVec lo = a.cwiseMin(b);
    const StateVec hi = a.cwiseMax(b);
    const CellRange q = range_of(lo, hi);
    for (std::size_t i = q.lo[0]; i <= q.hi[0]; ++i) {
      for (std::size_t j = q.lo[1]; j <= q.hi[1]; ++j) {
        for (std::size_t k : buckets_[i * cells_[1] + j]) {
          // Report each box only from the first query cell it occupies.
          const CellRange& c = box_cells_[k];
          if (i != std::max(c.lo[0], q.lo[0]) || j != std::max(c.lo[1], q.lo[1])) continue;
          if (visit(k)) return true;
        }
      }
    }
    return false;
  }

 private:
  static constexpr std::size_t kBruteForceBelow = 16;

  struct CellRange {
    std::size_t lo[2] = {0, 0};
    std::size_t hi[2] = {0, 0};
  };

  std::size_t cell_of(std::size_t d, double v) const {
    const double rel = (v - origin_[d]) / width_[d];
    if (!(rel > 0.0)) return 0;
    const auto c = static_cast<std::size_t>(rel);
    return std::min(c, cells_[d] - 1);
  }

  CellRange range_of(const StateVec& lo, const StateVec& hi) const {
    CellRange r;
    for (std::size_t d = 0; d < axes_; ++d) {
      r.lo[d] = cell_of(d, lo[static_cast<Eigen::Index>(d)]);
      r.hi[d] = cell_of(d, hi[static_cast<Eigen::Index>(d)]);
    }
    return r;
  }

  bool enabled_ = false;
  std::size_t axes_ = 0;
  double origin_[2] = {0.0, 0.0};
  double width_[2] = {1.0, 1.0};
  std::size_t cells_[2] = {1, 1};
  std::vector<std::vector<std::size_t>> buckets_;
  std::vector<CellRange> box_cells_;
};

/// A path planning problem in R^n with box obstacles and a finite goal set.
/// Immutable after construction.
class ProblemDef {
 public:
  ProblemDef(AxisBox bounds, std::vector<AxisBox> obstacles, StateVec start,
             std::vector<StateVec> goals)
      : bounds_(std::move(bounds)),
        obstacles_(std::move(obstacles)),
        start_(std::move(start)),
        goals_(std::move(goals)) {
    const std::size_t n = bounds_.dimension();
    if (n == 0) throw std::invalid_argument("dimension: must be >= 1");
    for (std::size_t k = 0; k < obstacles_.size(); ++k) {
      if (obstacles_[k].dimension() != n) {
        throw std::invalid_argument("obstacles[" + std::to_string(k) + "]: dimension mismatch");
      }
    }
    detail::require_dimension(start_, n, "start");
    if (!detail::all_finite(start_)) throw std::invalid_argument("start: non-finite coordinate");
    if (goals_.empty()) throw std::invalid_argument("goals: at least one goal is required");
    for (std::size_t k = 0; k < goals_.size(); ++k) {
      detail::require_dimension(goals_[k], n, "goals");
      if (!detail::all_finite(goals_[k])) {
        throw std::invalid_argument("goals[" + std::to_string(k) + "]: non-finite coordinate");
      }
    }
    grid_ = ObstacleGrid(bounds_, obstacles_);
    if (!is_state_valid(start_)) throw std::invalid_argument("start: not a free state");
    for (std::size_t k = 0; k < goals_.size(); ++k) {
      if (!is_state_valid(goals_[k])) {
        throw std::invalid_argument("goals[" + std::to_string(k) + "]: not a free state");
      }
    }
  }

  std::size_t dimension() const { return bounds_.dimension(); }
  const AxisBox& bounds() const { return bounds_; }
  const std::vector<AxisBox>& obstacles() const { return obstacles_; }
  const StateVec& start() const { return start_; }
  const std::vector<StateVec>& goals() const { return goals_; }

  /// Accepted for file compatibility; collision checking is exact.
  std::optional<double> collision_resolution;

  /// Inside the bounds and not in the open interior of any obstacle.
  bool is_state_valid(const StateVec& x) const {
    detail::require_dimension(x, dimension(), "is_state_valid");
    if (!bounds_.contains(x)) return false;
    if (grid_.enabled()) {
      return !grid_.any_candidate(x, x, [&](std::size_t k) { return obstacles_[k].interior_contains(x); });
    }
    for (const AxisBox& box : obstacles_) {
      if (box.interior_contains(x)) return false;
    }
    return true;
  }

  /// True iff the closed segment stays in bounds and misses every obstacle interior.
  bool is_segment_free(const StateVec& a, const StateVec& b) const {
    detail::require_dimension(a, dimension(), "is_segment_free");
    detail::require_dimension(b, dimension(), "is_segment_free");
    if (!bounds_.contains(a) || !bounds_.contains(b)) return false;
    if (grid_.enabled()) {
      return !grid_.any_candidate(
          a, b, [&](std::size_t k) { return segment_hits_interior(a, b, obstacles_[k]); });
    }
    for (const AxisBox& box : obstacles_) {
      if (segment_hits_interior(a, b, box)) return false;
    }
    return true;
  }

 private:
  AxisBox bounds_;
  std::vector<AxisBox> obstacles_;
  StateVec start_;
  std::vector<StateVec> goals_;
  ObstacleGrid grid_;
};

/// Admissible edge cost estimate: straight-line distance, blind to obstacles.
inline double c_hat(const StateVec& x, const StateVec& y) {
  if (x.size() != y.size()) throw std::invalid_argument("c_hat: dimension mismatch");
  return (y - x).norm();
}

inline double g_hat(const ProblemDef& p, const StateVec& x) {
  detail::require_dimension(x, p.dimension(), "g_hat");
  return (x - p.start()).norm();
}

inline double h_hat(const ProblemDef& p, const StateVec& x) {
  detail::require_dimension(x, p.dimension(), "h_hat");
  double best = kInfinity;
  for (const StateVec& goal : p.goals()) best = std::min(best, (goal - x).norm());
  return best;
}

inline double f_hat(const ProblemDef& p, const StateVec& x) { return g_hat(p, x) + h_hat(p, x); }

/// Length of the segment if collision-free, otherwise infinity.
inline double c_true(const ProblemDef& p, const StateVec& x, const StateVec& y) {
  detail::require_dimension(x, p.dimension(), "c_true");
  detail::require_dimension(y, p.dimension(), "c_true");
  return p.is_segment_free(x, y) ? (y - x).norm() : kInfinity;
}

inline bool is_state_valid(const ProblemDef& p, const StateVec& x) {
  return static_cast<std::size_t>(x.size()) == p.dimension() && p.is_state_valid(x);
}

inline double path_cost(const ProblemDef& p, std::span<const StateVec> waypoints) {
  if (waypoints.size() < 2) throw std::invalid_argument("path_cost: need at least 2 waypoints");
  double total = 0.0;
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    total += c_true(p, waypoints[i - 1], waypoints[i]);
    if (total == kInfinity) return kInfinity;
  }
  return total;
}

}  // namespace bitstar
