#ifndef OTPQKD_INFOMATH_HPP
#define OTPQKD_INFOMATH_HPP

#include <cmath>
#include <initializer_list>
#include <span>

#include "otpqkd/errors.hpp"

namespace otpqkd {

/// Tolerance on the total mass accepted by `entropy`.
inline constexpr double kNormTolerance = 1e-12;

namespace detail {

inline double check_weights(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) {
      throw Error(ErrorCode::NegativeWeight, "weight " + std::to_string(w) + " is negative");
    }
    total += w;
  }
  return total;
}

// Shannon entropy of weights / total, 0 log 0 = 0.
inline double scaled_entropy(std::span<const double> weights, double total) {
  double h = 0.0;
  for (double w : weights) {
    if (w > 0.0) {
      const double p = w / total;
      h -= p * std::log2(p);
    }
  }
  return h < 0.0 ? 0.0 : h;
}

}  // namespace detail

/// Shannon entropy in bits of a probability distribution.
///
/// The distribution must sum to 1 within `kNormTolerance`; it is
/// renormalized before taking logarithms so that rounding in the input does
/// not leak into the result.
inline double entropy(std::span<const double> dist) {
  const double total = detail::check_weights(dist);
  if (std::abs(total - 1.0) > kNormTolerance) {
    throw Error(ErrorCode::NotNormalized, "distribution sums to " + std::to_string(total));
  }
  return detail::scaled_entropy(dist, total);
}

inline double entropy(std::initializer_list<double> dist) {
  return entropy(std::span<const double>(dist.begin(), dist.size()));
}

/// Entropy of the distribution obtained by normalizing a non-negative tuple.
/// An all-zero tuple has no distribution and raises ZeroTotal.
inline double normalized_entropy(std::span<const double> weights) {
  const double total = detail::check_weights(weights);
  if (total <= 0.0) {
    throw Error(ErrorCode::ZeroTotal, "tuple has zero total weight");
  }
  return detail::scaled_entropy(weights, total);
}

inline double normalized_entropy(std::initializer_list<double> weights) {
  return normalized_entropy(std::span<const double>(weights.begin(), weights.size()));
}

/// `coefficient * normalized_entropy(weights)`, taken as 0 when the
/// coefficient vanishes or the tuple is all zero.
inline double weighted_normalized_entropy(double coefficient, std::initializer_list<double> weights) {
  const std::span<const double> view(weights.begin(), weights.size());
  if (coefficient == 0.0 || detail::check_weights(view) <= 0.0) return 0.0;
  return coefficient * normalized_entropy(view);
}

inline double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::OutOfRange, "probability " + std::to_string(p) + " outside [0,1]");
  }
  if (p == 0.0 || p == 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

}  // namespace otpqkd

#endif
