#ifndef OTPQKD_KEYRATES_HPP
#define OTPQKD_KEYRATES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "otpqkd/errormodel.hpp"
#include "otpqkd/errors.hpp"
#include "otpqkd/infomath.hpp"
#include "otpqkd/minimize.hpp"

namespace otpqkd {

inline constexpr std::size_t kDefaultMaxBSteps = 20;

// ---------------------------------------------------------------------------
// Entropy terms of the preprocessed branches.

/// Probability that a length-2 block has odd bit-error parity.
inline double odd_block_probability(const PauliRates& q) noexcept {
  const double p_Z = q.bit_error();
  return 2.0 * p_Z * (1.0 - p_Z);
}

/// H[q_I^2, q_I q_Z, q_Z q_I, q_Z^2, q_X^2, q_X q_Y, q_Y q_X, q_Y^2]: joint
/// Pauli uncertainty of an even block.
inline double even_block_entropy(const PauliRates& q) {
  const double iz = q.q_I * q.q_Z;
  const double xy = q.q_X * q.q_Y;
  return normalized_entropy({q.q_I * q.q_I, iz, iz, q.q_Z * q.q_Z, q.q_X * q.q_X, xy, xy, q.q_Y * q.q_Y});
}

/// H[q_X, q_Y]: phase uncertainty of the second bit when the first bit was
/// received correctly in an odd block. Zero when the tuple vanishes.
inline double odd0_entropy(const PauliRates& q) { return weighted_normalized_entropy(1.0, {q.q_X, q.q_Y}); }

/// H[q_I, q_Z]: same for blocks whose first bit was flipped.
inline double odd1_entropy(const PauliRates& q) { return weighted_normalized_entropy(1.0, {q.q_I, q.q_Z}); }

// ---------------------------------------------------------------------------
// Six-state rates.

/// 1 - H(q_I, q_X, q_Z, q_Y). Unclamped.
inline double oneway_rate(const PauliRates& q) { return 1.0 - entropy({q.q_I, q.q_X, q.q_Z, q.q_Y}); }

/// Net key rate with one-time-pad-assisted parity preprocessing:
/// 1 - H(q) + (P_odd / 4)(H[q_I, q_Z] + H[q_X, q_Y]).
inline double proposed_net_rate(const PauliRates& q) {
  const double p_odd = odd_block_probability(q);
  const double gain = weighted_normalized_entropy(p_odd / 4.0, {q.q_I, q.q_Z}) +
                      weighted_normalized_entropy(p_odd / 4.0, {q.q_X, q.q_Y});
  return oneway_rate(q) + gain;
}

/// Asymptotic per-branch lengths for n raw bits.
struct BranchLengths {
  double even_bits = 0.0;
  double odd0_bits = 0.0;
  double odd1_bits = 0.0;
  double consumed_bits = 0.0;

  double net() const noexcept { return even_bits + odd0_bits + odd1_bits - consumed_bits; }
};

inline BranchLengths proposed_net_rate_decomposed(const PauliRates& q, std::size_t n) {
  if (n % 2 != 0) throw Error(ErrorCode::ConfigError, "raw key length must be even");
  const double nn = static_cast<double>(n);
  const double p_odd = odd_block_probability(q);
  const double p_even = 1.0 - p_odd;
  BranchLengths out;
  out.even_bits = nn * p_even / 2.0 * (2.0 - even_block_entropy(q));
  out.odd0_bits = nn * p_odd / 4.0 * (1.0 - odd0_entropy(q));
  out.odd1_bits = nn * p_odd / 4.0 * (1.0 - odd1_entropy(q));
  out.consumed_bits = nn / 2.0 * entropy({p_even, p_odd});
  return out;
}

// ---------------------------------------------------------------------------
// BB84 rates.

inline void check_bb84_rates(double p_Z, double p_X) {
  if (!(p_Z >= 0.0 && p_Z <= 0.5 && p_X >= 0.0 && p_X <= 0.5)) {
    throw Error(ErrorCode::OutOfRange, "BB84 error rates must lie in [0, 1/2]");
  }
}

inline double bb84_oneway_rate(double p_Z, double p_X) {
  check_bb84_rates(p_Z, p_X);
  return 1.0 - binary_entropy(p_Z) - binary_entropy(p_X);
}

struct WorstCaseRate {
  double rate = 0.0;
  double alpha = 0.0;
};

/// Minimum of `rate(bb84_worst_case_family(p_Z, p_X, alpha))` over alpha.
template <typename RateFn>
WorstCaseRate bb84_worst_case(double p_Z, double p_X, RateFn&& rate) {
  check_bb84_rates(p_Z, p_X);
  const double upper = std::min(p_Z, p_X);
  const auto objective = [&](double alpha) {
    return rate(bb84_worst_case_family(p_Z, p_X, std::clamp(alpha, 0.0, upper)));
  };
  const ScalarMinimum m = minimize_on_interval(objective, 0.0, upper);
  return {m.value, m.arg};
}

inline WorstCaseRate bb84_proposed_net_rate(double p_Z, double p_X) {
  return bb84_worst_case(p_Z, p_X, [](const PauliRates& q) { return proposed_net_rate(q); });
}

/// min over alpha of the six-state one-way rate; equals 1 - h(p_Z) - h(p_X).
inline WorstCaseRate bb84_oneway_min_alpha(double p_Z, double p_X) {
  return bb84_worst_case(p_Z, p_X, [](const PauliRates& q) { return oneway_rate(q); });
}

// ---------------------------------------------------------------------------
// B-step post-selection.

struct BStepOutcome {
  PauliRates survived;
  double survival_prob = 1.0;
  double yield_factor = 0.5;
};

/// One B-step on pairs: keep the first pair when both bit-error flags agree.
/// The kept pair inherits the common bit flag and the XOR of phase flags.
inline BStepOutcome bstep(const PauliRates& q) {
  const double even = q.q_I + q.q_Z;
  const double odd = q.q_X + q.q_Y;
  const double s = even * even + odd * odd;
  if (!(s > 0.0)) throw Error(ErrorCode::DegenerateChannel, "B-step survival probability is zero");
  BStepOutcome out;
  out.survival_prob = s;
  out.yield_factor = s / 2.0;
  out.survived = PauliRates{(q.q_I * q.q_I + q.q_Z * q.q_Z) / s, (q.q_X * q.q_X + q.q_Y * q.q_Y) / s,
                            2.0 * q.q_X * q.q_Y / s, 2.0 * q.q_I * q.q_Z / s};
  return out;
}

struct BStepRate {
  double rate = 0.0;
  std::size_t best_step_count = 0;
};

/// Six-state: max over k <= max_steps of (prod of yields) * oneway_rate(q^(k)).
inline BStepRate bstep_optimal_rate(const PauliRates& q, std::size_t max_steps = kDefaultMaxBSteps) {
  BStepRate best{oneway_rate(q), 0};
  PauliRates current = q;
  double yield = 1.0;
  for (std::size_t k = 1; k <= max_steps; ++k) {
    const BStepOutcome step = bstep(current);
    current = step.survived;
    yield *= step.yield_factor;
    const double r = yield * oneway_rate(current);
    if (r > best.rate) best = {r, k};
  }
  return best;
}

/// BB84 rate after exactly k B-steps: the channel behind (p_Z, p_X) is any
/// member of the alpha family, so the one-way rate at the observed rates of
/// q^(k) is minimized over the starting alpha.
inline WorstCaseRate bb84_bstep_rate(double p_Z, double p_X, std::size_t steps) {
  return bb84_worst_case(p_Z, p_X, [steps](const PauliRates& start) {
    PauliRates current = start;
    double yield = 1.0;
    for (std::size_t k = 0; k < steps; ++k) {
      const BStepOutcome step = bstep(current);
      current = step.survived;
      yield *= step.yield_factor;
    }
    const ObservedRates obs = observed_from_pauli(current);
    return yield * (1.0 - binary_entropy(std::clamp(obs.p_Z, 0.0, 1.0)) -
                    binary_entropy(std::clamp(obs.p_X, 0.0, 1.0)));
  });
}

/// BB84: step count fixed before the worst case is taken, max_k min_alpha.
inline BStepRate bb84_bstep_optimal_rate(double p_Z, double p_X, std::size_t max_steps = kDefaultMaxBSteps) {
  BStepRate best{bb84_oneway_rate(p_Z, p_X), 0};
  for (std::size_t k = 1; k <= max_steps; ++k) {
    const double r = bb84_bstep_rate(p_Z, p_X, k).rate;
    if (r > best.rate) best = {r, k};
  }
  return best;
}

// ---------------------------------------------------------------------------
// Curves.

enum class Variant { SixStateOneWay, SixStateProposed, SixStateBStepOpt, BB84OneWay, BB84Proposed, BB84BStepOpt };

constexpr std::string_view to_string(Variant v) noexcept {
  switch (v) {
    case Variant::SixStateOneWay: return "six-state-one-way";
    case Variant::SixStateProposed: return "six-state-proposed";
    case Variant::SixStateBStepOpt: return "six-state-bstep-opt";
    case Variant::BB84OneWay: return "bb84-one-way";
    case Variant::BB84Proposed: return "bb84-proposed";
    case Variant::BB84BStepOpt: return "bb84-bstep-opt";
  }
  return "unknown";
}

constexpr bool is_six_state(Variant v) noexcept {
  return v == Variant::SixStateOneWay || v == Variant::SixStateProposed || v == Variant::SixStateBStepOpt;
}

/// One evaluated point. `channel_param` is the observed bit-error rate p_Z:
/// six-state variants use the depolarizing channel with p = p_Z / 2, BB84
/// variants use p_Z = p_X.
struct RatePoint {
  double channel_param = 0.0;
  Variant variant = Variant::SixStateOneWay;
  double rate = 0.0;
  std::optional<std::size_t> bstep_count;
  std::optional<double> alpha_star;

  double clamped() const noexcept { return std::max(0.0, rate); }
};

using RateCurve = std::vector<RatePoint>;

inline RatePoint evaluate(Variant variant, double p_Z, std::size_t max_steps = kDefaultMaxBSteps) {
  RatePoint pt;
  pt.channel_param = p_Z;
  pt.variant = variant;
  if (is_six_state(variant)) {
    if (!(p_Z >= 0.0 && p_Z <= 2.0 / 3.0)) {
      throw Error(ErrorCode::OutOfRange, "six-state bit-error rate outside [0, 2/3]");
    }
    const PauliRates q = depolarizing(std::min(p_Z / 2.0, 1.0 / 3.0));
    switch (variant) {
      case Variant::SixStateOneWay: pt.rate = oneway_rate(q); break;
      case Variant::SixStateProposed: pt.rate = proposed_net_rate(q); break;
      default: {
        const BStepRate b = bstep_optimal_rate(q, max_steps);
        pt.rate = b.rate;
        pt.bstep_count = b.best_step_count;
      }
    }
    return pt;
  }
  switch (variant) {
    case Variant::BB84OneWay: pt.rate = bb84_oneway_rate(p_Z, p_Z); break;
    case Variant::BB84Proposed: {
      const WorstCaseRate w = bb84_proposed_net_rate(p_Z, p_Z);
      pt.rate = w.rate;
      pt.alpha_star = w.alpha;
      break;
    }
    default: {
      const BStepRate b = bb84_bstep_optimal_rate(p_Z, p_Z, max_steps);
      pt.rate = b.rate;
      pt.bstep_count = b.best_step_count;
    }
  }
  return pt;
}

/// `steps` evenly spaced points from start to end inclusive.
inline RateCurve rate_curve(Variant variant, double start, double end, std::size_t steps,
                            std::size_t max_steps = kDefaultMaxBSteps) {
  if (!(start >= 0.0 && start < end) || steps < 2) {
    throw Error(ErrorCode::ConfigError, "rate_curve needs 0 <= start < end and steps >= 2");
  }
  RateCurve curve;
  curve.reserve(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(steps - 1);
    const double p = i + 1 == steps ? end : start + (end - start) * t;
    curve.push_back(evaluate(variant, p, max_steps));
  }
  return curve;
}

/// First positive-to-nonpositive sign change of the raw rate on [lo, hi],
/// located by a scan of `scan_points` and then bisection to `tolerance`.
inline std::optional<double> rate_crossing(Variant variant, double lo, double hi, std::size_t max_steps = kDefaultMaxBSteps,
                                           std::size_t scan_points = 501, double tolerance = 1e-7) {
  const auto f = [&](double p) { return evaluate(variant, p, max_steps).rate; };
  double prev_x = lo;
  double prev_f = f(lo);
  for (std::size_t i = 1; i < scan_points; ++i) {
    const double x = i + 1 == scan_points ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(scan_points - 1);
    const double fx = f(x);
    if (prev_f > 0.0 && fx <= 0.0) {
      double a = prev_x;
      double b = x;
      while (b - a > tolerance) {
        const double mid = 0.5 * (a + b);
        if (f(mid) > 0.0) {
          a = mid;
        } else {
          b = mid;
        }
      }
      return 0.5 * (a + b);
    }
    prev_x = x;
    prev_f = fx;
  }
  return std::nullopt;
}

}  // namespace otpqkd

#endif
