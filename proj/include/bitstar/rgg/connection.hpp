#pragma once

// Random geometric graph connection limits for batches of uniform samples.

#include "bitstar/sampling/informed.hpp"

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>

namespace bitstar {

enum class RggMode { kRadius, kKNearest };

struct RggParams {
  RggMode mode = RggMode::kRadius;
  /// Multiplier on the lower bound; strictly greater than 1.
  double eta = 2.0;
  std::optional<double> r_max;
  std::size_t dimension = 2;
  /// Measure of the whole state space, lambda(X).
  double space_measure = 1.0;
  std::size_t batch_size = 100;

  void validate() const {
    if (!(eta > 1.0)) throw std::invalid_argument("RggParams: eta must be > 1");
    if (r_max && !(*r_max > 0.0)) throw std::invalid_argument("RggParams: r_max must be > 0");
    if (dimension == 0) throw std::invalid_argument("RggParams: dimension must be >= 1");
    if (!(space_measure > 0.0)) throw std::invalid_argument("RggParams: space_measure must be > 0");
  }
};

/// Connection radius for a graph of q uniformly distributed states:
///   eta * (2 (1 + 1/n) (min{lambda(X), informed_measure} / zeta_n) (log q / q))^(1/n)
/// clamped above by r_max.
inline double radius_bound(const RggParams& params, double informed_measure, std::size_t q) {
  if (q < 2) throw std::invalid_argument("radius_bound: q must be >= 2");
  const double n = static_cast<double>(params.dimension);
  const double measure = std::min(params.space_measure, informed_measure);
  const double qd = static_cast<double>(q);
  const double inner = 2.0 * (1.0 + 1.0 / n) * (measure / unit_ball_measure(params.dimension)) *
                       (std::log(qd) / qd);
  double r = params.eta * std::pow(inner, 1.0 / n);
  if (params.r_max) r = std::min(r, *params.r_max);
  return r;
}

/// Number of neighbours for a graph of q uniformly distributed states:
///   ceil(eta * e * (1 + 1/n) * log q).
/// Takes a real-valued q so the bound can be evaluated between integers.
inline std::size_t k_bound_at(const RggParams& params, double q) {
  if (!(q > 1.0)) throw std::invalid_argument("k_bound: q must be > 1");
  const double n = static_cast<double>(params.dimension);
  return static_cast<std::size_t>(
      std::ceil(params.eta * std::numbers::e * (1.0 + 1.0 / n) * std::log(q)));
}

inline std::size_t k_bound(const RggParams& params, std::size_t q) {
  if (q < 2) throw std::invalid_argument("k_bound: q must be >= 2");
  return k_bound_at(params, static_cast<double>(q));
}

}  // namespace bitstar
