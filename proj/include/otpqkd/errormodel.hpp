#ifndef OTPQKD_ERRORMODEL_HPP
#define OTPQKD_ERRORMODEL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "otpqkd/bitvector.hpp"
#include "otpqkd/errors.hpp"
#include "otpqkd/random.hpp"

namespace otpqkd {

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

/// (bit flag, phase flag) encoding: I=(0,0), X=(1,0), Y=(1,1), Z=(0,1).
constexpr bool bit_flag(Pauli p) noexcept { return p == Pauli::X || p == Pauli::Y; }
constexpr bool phase_flag(Pauli p) noexcept { return p == Pauli::Y || p == Pauli::Z; }

constexpr Pauli pauli_from_flags(bool bit, bool phase) noexcept {
  if (bit) return phase ? Pauli::Y : Pauli::X;
  return phase ? Pauli::Z : Pauli::I;
}

/// Bell-diagonal weights of the channel.
struct PauliRates {
  double q_I = 1.0;
  double q_X = 0.0;
  double q_Y = 0.0;
  double q_Z = 0.0;

  static constexpr double kTolerance = 1e-12;

  /// Validated construction; throws OutOfRange / NotNormalized.
  static PauliRates make(double q_I, double q_X, double q_Y, double q_Z) {
    PauliRates q{q_I, q_X, q_Y, q_Z};
    q.validate();
    return q;
  }

  void validate() const {
    for (double v : {q_I, q_X, q_Y, q_Z}) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw Error(ErrorCode::OutOfRange, "Pauli rate " + std::to_string(v) + " outside [0,1]");
      }
    }
    const double total = q_I + q_X + q_Y + q_Z;
    if (std::abs(total - 1.0) > kTolerance) {
      throw Error(ErrorCode::NotNormalized, "Pauli rates sum to " + std::to_string(total));
    }
  }

  double operator[](Pauli p) const noexcept {
    switch (p) {
      case Pauli::I: return q_I;
      case Pauli::X: return q_X;
      case Pauli::Y: return q_Y;
      case Pauli::Z: return q_Z;
    }
    return 0.0;
  }

  /// Bit-error rate seen in the Z basis.
  double bit_error() const noexcept { return q_X + q_Y; }

  friend bool operator==(const PauliRates&, const PauliRates&) = default;
};

/// Basis-wise error rates. BB84 has no Y basis, so `p_Y` is absent there.
struct ObservedRates {
  double p_X = 0.0;
  std::optional<double> p_Y;
  double p_Z = 0.0;

  bool six_state() const noexcept { return p_Y.has_value(); }

  friend bool operator==(const ObservedRates&, const ObservedRates&) = default;
};

/// Per-position Pauli errors as two flag strings of equal length.
struct ErrorString {
  BitVector bit_flags;
  BitVector phase_flags;

  std::size_t size() const noexcept { return bit_flags.size(); }

  Pauli at(std::size_t i) const noexcept { return pauli_from_flags(bit_flags[i], phase_flags[i]); }

  /// Occurrences of I, X, Y, Z in that order.
  std::array<std::size_t, 4> counts() const {
    std::array<std::size_t, 4> c{};
    for (std::size_t i = 0; i < size(); ++i) ++c[static_cast<std::size_t>(at(i))];
    return c;
  }
};

inline PauliRates depolarizing(double p) {
  if (!(p >= 0.0 && p <= 1.0 / 3.0)) {
    throw Error(ErrorCode::OutOfRange, "depolarizing parameter " + std::to_string(p) + " outside [0,1/3]");
  }
  return PauliRates{std::max(0.0, 1.0 - 3.0 * p), p, p, p};
}

inline ObservedRates observed_from_pauli(const PauliRates& q) {
  return ObservedRates{q.q_Z + q.q_Y, q.q_X + q.q_Z, q.q_X + q.q_Y};
}

/// Inverts `observed_from_pauli`. Realizable triples may come out a few ulps
/// negative; those are clamped to 0.
inline PauliRates pauli_from_observed(const ObservedRates& p) {
  if (!p.p_Y) throw Error(ErrorCode::Inconsistent, "p_Y is required to recover all Pauli rates");
  const double p_Y = *p.p_Y;
  for (double v : {p.p_X, p_Y, p.p_Z}) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::OutOfRange, "observed rate outside [0,1]");
  }
  double q_X = (p.p_Z + p_Y - p.p_X) / 2.0;
  double q_Z = (p.p_X + p_Y - p.p_Z) / 2.0;
  double q_Y = (p.p_Z + p.p_X - p_Y) / 2.0;
  double q_I = 1.0 - q_X - q_Y - q_Z;
  for (double v : {q_I, q_X, q_Y, q_Z}) {
    if (v < -PauliRates::kTolerance) {
      throw Error(ErrorCode::Inconsistent, "observed rates are not realizable by a Pauli channel");
    }
  }
  q_X = std::max(q_X, 0.0);
  q_Y = std::max(q_Y, 0.0);
  q_Z = std::max(q_Z, 0.0);
  q_I = std::max(q_I, 0.0);
  return PauliRates{q_I, q_X, q_Y, q_Z};
}

/// Channel consistent with BB84 observations (p_Z, p_X) with Y weight alpha.
inline PauliRates bb84_worst_case_family(double p_Z, double p_X, double alpha) {
  const double upper = std::min(p_Z, p_X);
  if (!(alpha >= -PauliRates::kTolerance && alpha <= upper + PauliRates::kTolerance)) {
    throw Error(ErrorCode::OutOfRange, "alpha " + std::to_string(alpha) + " outside [0, min(p_Z,p_X)]");
  }
  alpha = std::clamp(alpha, 0.0, upper);
  return PauliRates{std::max(0.0, 1.0 - p_Z - p_X + alpha), p_Z - alpha, alpha, p_X - alpha};
}

/// Draws one Pauli from `q` given a uniform variate in [0,1).
inline Pauli draw_pauli(const PauliRates& q, double u) noexcept {
  if (u < q.q_I) return Pauli::I;
  u -= q.q_I;
  if (u < q.q_X) return Pauli::X;
  u -= q.q_X;
  if (u < q.q_Y) return Pauli::Y;
  u -= q.q_Y;
  if (u < q.q_Z) return Pauli::Z;
  // Rounding residue: fall back to the last non-zero outcome.
  if (q.q_Z > 0.0) return Pauli::Z;
  if (q.q_Y > 0.0) return Pauli::Y;
  if (q.q_X > 0.0) return Pauli::X;
  return Pauli::I;
}

inline ErrorString sample_errors(const PauliRates& q, std::size_t n, Rng& rng) {
  ErrorString e{BitVector(n), BitVector(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const Pauli p = draw_pauli(q, rng.uniform());
    if (bit_flag(p)) e.bit_flags.set(i, true);
    if (phase_flag(p)) e.phase_flags.set(i, true);
  }
  return e;
}

/// n i.i.d. draws from `q`; identical strings for identical seeds.
inline ErrorString sample_errors(const PauliRates& q, std::size_t n, std::uint64_t seed) {
  q.validate();
  if (n == 0) throw Error(ErrorCode::ConfigError, "sample_errors needs n >= 1");
  Rng rng(seed);
  return sample_errors(q, n, rng);
}

}  // namespace otpqkd

#endif
