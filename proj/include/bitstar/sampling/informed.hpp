#pragma once

// Uniform sampling of boxes and of L2 informed sets (prolate hyperspheroids),
// plus the Lebesgue measures the connection limits and JIT sampling need.

#include "bitstar/core/geometry.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace bitstar {

/// Seeded 64-bit generator. Same seed and call sequence, same stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Uniform on [0, 1).
  double uniform01() { return unit_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit_(engine_); }
  double normal() { return normal_(engine_); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Lebesgue measure of the unit n-ball, pi^(n/2) / Gamma(n/2 + 1).
inline double unit_ball_measure(std::size_t n) {
  if (n == 0) throw std::invalid_argument("unit_ball_measure: n must be >= 1");
  // zeta_n = zeta_{n-2} * 2 pi / n, exact for the half-integer Gamma values.
  double even = 1.0;  // zeta_0
  double odd = 2.0;   // zeta_1
  if (n == 1) return odd;
  double value = 0.0;
  for (std::size_t k = 2; k <= n; ++k) {
    if (k % 2 == 0) {
      even *= 2.0 * std::numbers::pi / static_cast<double>(k);
      value = even;
    } else {
      odd *= 2.0 * std::numbers::pi / static_cast<double>(k);
      value = odd;
    }
  }
  return value;
}

/// Measure of {x : |x - a| + |x - b| <= c} with |b - a| = c_min.
inline double phs_measure(std::size_t n, double c_min, double c) {
  if (!(c_min > 0.0)) throw std::invalid_argument("phs_measure: c_min must be > 0");
  if (c < c_min) throw std::invalid_argument("phs_measure: c < c_min");
  if (c == kInfinity) return kInfinity;
  const double conj = std::sqrt(c * c - c_min * c_min);
  return c * std::pow(conj, static_cast<double>(n) - 1.0) * unit_ball_measure(n) /
         std::pow(2.0, static_cast<double>(n));
}

/// Uniform sample from the closed unit n-ball (Gaussian direction, radius U^(1/n)).
inline StateVec sample_unit_ball(Rng& rng, std::size_t n) {
  StateVec v(static_cast<Eigen::Index>(n));
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
    norm = v.norm();
  } while (norm == 0.0);
  const double radius = std::pow(rng.uniform01(), 1.0 / static_cast<double>(n));
  return v * (radius / norm);
}

inline StateVec sample_uniform_box(Rng& rng, const AxisBox& box) {
  StateVec x(box.lower.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    x[i] = box.lower[i] + (box.upper[i] - box.lower[i]) * rng.uniform01();
  }
  // Guards lower + (upper - lower) * u rounding past upper.
  return x.cwiseMin(box.upper).cwiseMax(box.lower);
}

/// The L2 informed set for one start/goal pair.
class ProlateHyperspheroid {
 public:
  ProlateHyperspheroid(StateVec focus_a, StateVec focus_b)
      : focus_a_(std::move(focus_a)), focus_b_(std::move(focus_b)) {
    if (focus_a_.size() != focus_b_.size()) {
      throw std::invalid_argument("ProlateHyperspheroid: focus dimension mismatch");
    }
    c_min_ = (focus_b_ - focus_a_).norm();
    if (!(c_min_ > 0.0)) throw std::invalid_argument("ProlateHyperspheroid: coincident foci");
    center_ = 0.5 * (focus_a_ + focus_b_);
    const Eigen::Index n = focus_a_.size();
    // Orthonormal completion of the transverse axis via the SVD of a1 * e1^T.
    const StateVec axis = (focus_b_ - focus_a_) / c_min_;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    m.col(0) = axis;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    StateVec middle = StateVec::Ones(n);
    middle[n - 1] = svd.matrixU().determinant() * svd.matrixV().determinant();
    rotation_ = svd.matrixU() * middle.asDiagonal() * svd.matrixV().transpose();
  }

  std::size_t dimension() const { return static_cast<std::size_t>(focus_a_.size()); }
  const StateVec& focus_a() const { return focus_a_; }
  const StateVec& focus_b() const { return focus_b_; }
  const StateVec& center() const { return center_; }
  double c_min() const { return c_min_; }
  const Eigen::MatrixXd& rotation_world() const { return rotation_; }

  /// Sum of focal distances, the transverse diameter of the PHS through x.
  double focal_sum(const StateVec& x) const {
    return (x - focus_a_).norm() + (x - focus_b_).norm();
  }

  double measure(double c) const {
    if (c <= c_min_) return 0.0;
    return phs_measure(dimension(), c_min_, c);
  }

  /// Maps a unit-ball point into the PHS with transverse diameter c.
  StateVec from_unit_ball(const StateVec& ball, double c) const {
    const double conj = std::sqrt(c * c - c_min_ * c_min_);
    StateVec scaled = ball * (0.5 * conj);
    scaled[0] = ball[0] * 0.5 * c;
    return rotation_ * scaled + center_;
  }

  /// Axis-aligned bounding box of the PHS for cost c.
  AxisBox bounding_box(double c) const {
    const double conj = std::sqrt(c * c - c_min_ * c_min_);
    StateVec radii(focus_a_.size());
    for (Eigen::Index i = 0; i < radii.size(); ++i) {
      double sq = 0.0;
      for (Eigen::Index j = 0; j < radii.size(); ++j) {
        const double semi = (j == 0 ? c : conj) * 0.5;
        sq += std::pow(rotation_(i, j) * semi, 2);
      }
      radii[i] = std::sqrt(sq);
    }
    return AxisBox(center_ - radii, center_ + radii);
  }

 private:
  StateVec focus_a_;
  StateVec focus_b_;
  StateVec center_;
  double c_min_ = 0.0;
  Eigen::MatrixXd rotation_;
};

inline constexpr int kMaxRejections = 10000;

/// Uniform over {focal_sum < c_best} intersected with bounds; uniform over the
/// bounds when c_best is infinite.
inline StateVec sample_informed(Rng& rng, const ProlateHyperspheroid& phs, const AxisBox& bounds,
                                double c_best) {
  if (c_best == kInfinity) return sample_uniform_box(rng, bounds);
  if (!(c_best > phs.c_min())) {
    throw std::invalid_argument("sample_informed: c_best must exceed c_min");
  }
  const std::size_t n = phs.dimension();
  const bool from_phs = phs.measure(c_best) <= bounds.measure();
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    StateVec x = from_phs ? phs.from_unit_ball(sample_unit_ball(rng, n), c_best)
                          : sample_uniform_box(rng, bounds);
    if (bounds.contains(x) && phs.focal_sum(x) < c_best) return x;
  }
  // The PHS barely overlaps the bounds; fall back to the box, which always
  // contains the (valid) foci and therefore part of the set.
  for (;;) {
    StateVec x = sample_uniform_box(rng, bounds);
    if (phs.focal_sum(x) < c_best) return x;
  }
}

struct ShellStats {
  std::size_t fallbacks = 0;
};

/// Uniform over {c_lo <= focal_sum < c_hi} intersected with bounds, by
/// rejection from the outer PHS.
inline StateVec sample_informed_shell(Rng& rng, const ProlateHyperspheroid& phs,
                                      const AxisBox& bounds, double c_lo, double c_hi,
                                      ShellStats* stats = nullptr) {
  if (!(c_hi > c_lo)) throw std::invalid_argument("sample_informed_shell: empty shell");
  if (c_hi != kInfinity && !(c_hi > phs.c_min())) {
    throw std::invalid_argument("sample_informed_shell: shell lies below c_min");
  }
  if (c_hi == kInfinity) {
    for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
      StateVec x = sample_uniform_box(rng, bounds);
      if (phs.focal_sum(x) >= c_lo) return x;
    }
    if (stats != nullptr) ++stats->fallbacks;
    return sample_uniform_box(rng, bounds);
  }
  const std::size_t n = phs.dimension();
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    StateVec x = phs.from_unit_ball(sample_unit_ball(rng, n), c_hi);
    if (!bounds.contains(x)) continue;
    const double s = phs.focal_sum(x);
    if (s >= c_lo && s < c_hi) return x;
  }
  if (stats != nullptr) ++stats->fallbacks;
  return sample_informed(rng, phs, bounds, c_hi);
}

/// Informed sampler for a problem with one or more goals. The informed set is
/// the union of the per-goal hyperspheroids, i.e. {x : f_hat(x) < c}.
class InformedSampler {
 public:
  explicit InformedSampler(const ProblemDef& problem) : problem_(&problem) {
    for (const StateVec& goal : problem.goals()) {
      if ((goal - problem.start()).norm() > 0.0) phs_.emplace_back(problem.start(), goal);
    }
  }

  const std::vector<ProlateHyperspheroid>& hyperspheroids() const { return phs_; }

  /// Upper bound on the informed-set measure (sum over goals), clipped to the bounds.
  double informed_measure(double c) const {
    if (c == kInfinity) return kInfinity;
    return std::min(union_upper_bound(c), problem_->bounds().measure());
  }

  /// Sum of per-goal PHS measures at cost c.
  double union_upper_bound(double c) const {
    double total = 0.0;
    for (const auto& e : phs_) total += e.measure(c);
    return total;
  }

  /// Uniform over {f_hat < c} intersected with the bounds.
  StateVec sample(Rng& rng, double c) const {
    const AxisBox& bounds = problem_->bounds();
    if (c == kInfinity) return sample_uniform_box(rng, bounds);
    const double total = union_upper_bound(c);
    if (!(total > 0.0)) throw std::invalid_argument("multi_goal_informed: informed set is empty");
    if (total > bounds.measure()) return sample_box_rejection(rng, c);
    std::vector<double> weights;
    weights.reserve(phs_.size());
    for (const auto& e : phs_) weights.push_back(e.measure(c));
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    const std::size_t n = problem_->dimension();
    for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
      const auto& e = phs_.size() == 1 ? phs_.front() : phs_[pick(rng.engine())];
      StateVec x = e.from_unit_ball(sample_unit_ball(rng, n), c);
      if (!bounds.contains(x) || !(f_hat(*problem_, x) < c)) continue;
      if (phs_.size() > 1) {
        std::size_t covering = 0;
        for (const auto& other : phs_) covering += other.focal_sum(x) < c ? 1 : 0;
        if (covering > 1 && rng.uniform01() * static_cast<double>(covering) >= 1.0) continue;
      }
      return x;
    }
    return sample_box_rejection(rng, c);
  }

 private:
  StateVec sample_box_rejection(Rng& rng, double c) const {
    for (;;) {
      StateVec x = sample_uniform_box(rng, problem_->bounds());
      if (f_hat(*problem_, x) < c) return x;
    }
  }

  const ProblemDef* problem_;
  std::vector<ProlateHyperspheroid> phs_;
};

/// One draw from the multi-goal informed set; builds the sampler each call.
inline StateVec multi_goal_informed(Rng& rng, const ProblemDef& p, double c_best) {
  return InformedSampler(p).sample(rng, c_best);
}

}  // namespace bitstar
