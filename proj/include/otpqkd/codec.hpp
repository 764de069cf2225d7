#ifndef OTPQKD_CODEC_HPP
#define OTPQKD_CODEC_HPP

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "otpqkd/bitvector.hpp"
#include "otpqkd/errors.hpp"
#include "otpqkd/random.hpp"

namespace otpqkd {

/// l x m binary matrix stored as l rows of length m.
class ParityCheckMatrix {
public:
  ParityCheckMatrix() = default;
  ParityCheckMatrix(std::size_t cols, std::vector<BitVector> rows) : cols_(cols), rows_(std::move(rows)) {
    for (const BitVector& r : rows_) {
      if (r.size() != cols_) throw Error(ErrorCode::DimensionMismatch, "matrix row has wrong length");
    }
    if (rows_.size() > cols_) throw Error(ErrorCode::DimensionMismatch, "parity check matrix needs l <= m");
  }

  static ParityCheckMatrix identity(std::size_t m) {
    std::vector<BitVector> rows(m, BitVector(m));
    for (std::size_t i = 0; i < m; ++i) rows[i].set(i, true);
    return {m, std::move(rows)};
  }

  std::size_t rows() const noexcept { return rows_.size(); }
  std::size_t cols() const noexcept { return cols_; }
  const BitVector& row(std::size_t i) const { return rows_[i]; }
  bool at(std::size_t r, std::size_t c) const { return rows_[r][c]; }

private:
  std::size_t cols_ = 0;
  std::vector<BitVector> rows_;
};

/// Row `index` of the seeded random matrix family. Each row has its own
/// stream, so rows can be regenerated without storing the whole matrix.
inline BitVector random_parity_row(std::uint64_t seed, std::size_t index, std::size_t m) {
  BitVector row(m);
  Rng rng(derive_seed(seed, index));
  for (auto& w : row.mutable_words()) w = rng.next();
  row.trim();
  return row;
}

inline ParityCheckMatrix random_parity_matrix(std::size_t l, std::size_t m, std::uint64_t seed) {
  if (l > m) throw Error(ErrorCode::DimensionMismatch, "random_parity_matrix needs l <= m");
  std::vector<BitVector> rows;
  rows.reserve(l);
  for (std::size_t r = 0; r < l; ++r) rows.push_back(random_parity_row(seed, r, m));
  return {m, std::move(rows)};
}

/// v * M^T over GF(2).
inline BitVector syndrome(const ParityCheckMatrix& matrix, const BitVector& v) {
  if (v.size() != matrix.cols()) throw Error(ErrorCode::DimensionMismatch, "syndrome input length differs from m");
  BitVector out(matrix.rows());
  for (std::size_t r = 0; r < matrix.rows(); ++r) out.set(r, matrix.row(r).dot(v));
  return out;
}

/// Syndromes of several vectors under `random_parity_matrix(l, m, seed)`,
/// generating one row at a time. Used where l * m is too large to store.
inline std::vector<BitVector> streamed_syndromes(std::uint64_t seed, std::size_t l, const std::vector<const BitVector*>& inputs) {
  if (inputs.empty()) return {};
  const std::size_t m = inputs.front()->size();
  if (l > m) throw Error(ErrorCode::DimensionMismatch, "streamed syndrome needs l <= m");
  std::vector<BitVector> out(inputs.size(), BitVector(l));
  for (const BitVector* v : inputs) {
    if (v->size() != m) throw Error(ErrorCode::DimensionMismatch, "streamed syndrome inputs differ in length");
  }
  for (std::size_t r = 0; r < l; ++r) {
    const BitVector row = random_parity_row(seed, r, m);
    for (std::size_t k = 0; k < inputs.size(); ++k) out[k].set(r, row.dot(*inputs[k]));
  }
  return out;
}

/// One-time-pad masking: bitwise XOR with pad bits.
inline BitVector otp_mask(const BitVector& t, const BitVector& pad) {
  if (t.size() != pad.size()) throw Error(ErrorCode::DimensionMismatch, "pad length differs from message length");
  return t ^ pad;
}

// ---------------------------------------------------------------------------
// Exhaustive maximum-likelihood syndrome decoding.

inline constexpr std::size_t kMaxDecodeLength = 24;

struct Decoding {
  BitVector error;
  /// More than one pattern shared the maximum likelihood.
  bool ambiguous_tie = false;
  std::size_t candidates = 0;
};

namespace detail {

// Lexicographic order of bit sequences (position 0 first) on masks.
constexpr bool lex_less(std::uint32_t a, std::uint32_t b) noexcept {
  const std::uint32_t diff = a ^ b;
  if (diff == 0) return false;
  return (a & (diff & (~diff + 1))) == 0;
}

// Next integer with the same popcount (Gosper's hack).
constexpr std::uint32_t next_same_weight(std::uint32_t x) noexcept {
  const std::uint32_t c = x & (~x + 1);
  const std::uint32_t r = x + c;
  return (((r ^ x) >> 2) / c) | r;
}

}  // namespace detail

/// Most likely error pattern e with e * M^T = t under an i.i.d. Bernoulli(prior)
/// prior, ties broken towards the lexicographically smallest pattern.
/// Exhaustive over patterns, so m is capped at `kMaxDecodeLength`.
inline Decoding decode_syndrome(const ParityCheckMatrix& matrix, const BitVector& target, double prior) {
  const std::size_t m = matrix.cols();
  const std::size_t l = matrix.rows();
  if (m > kMaxDecodeLength) throw Error(ErrorCode::DimensionMismatch, "exhaustive decoding limited to m <= 24");
  if (target.size() != l) throw Error(ErrorCode::DimensionMismatch, "syndrome length differs from l");
  if (!(prior >= 0.0 && prior <= 1.0)) throw Error(ErrorCode::OutOfRange, "prior outside [0,1]");

  std::vector<std::uint32_t> columns(m, 0);
  for (std::size_t r = 0; r < l; ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      if (matrix.at(r, c)) columns[c] |= std::uint32_t{1} << r;
    }
  }
  std::uint32_t goal = 0;
  for (std::size_t r = 0; r < l; ++r) {
    if (target[r]) goal |= std::uint32_t{1} << r;
  }
  const auto syndrome_of = [&](std::uint32_t mask) {
    std::uint32_t s = 0;
    while (mask != 0) {
      s ^= columns[static_cast<std::size_t>(std::countr_zero(mask))];
      mask &= mask - 1;
    }
    return s;
  };

  // Likelihood depends on weight only: ascending weight for prior < 1/2,
  // descending for prior > 1/2, one class for prior = 1/2.
  std::vector<std::vector<std::size_t>> classes;
  if (prior < 0.5) {
    for (std::size_t w = 0; w <= m; ++w) classes.push_back({w});
  } else if (prior > 0.5) {
    for (std::size_t w = m + 1; w-- > 0;) classes.push_back({w});
  } else {
    classes.emplace_back();
    for (std::size_t w = 0; w <= m; ++w) classes.back().push_back(w);
  }

  const std::uint32_t full = m == 32 ? ~std::uint32_t{0} : (std::uint32_t{1} << m) - 1;
  for (const auto& weights : classes) {
    std::size_t found = 0;
    std::uint32_t best = 0;
    for (std::size_t w : weights) {
      if (w == 0) {
        if (goal == 0) {
          if (found == 0 || detail::lex_less(0, best)) best = 0;
          ++found;
        }
        continue;
      }
      std::uint32_t mask = (std::uint32_t{1} << w) - 1;
      while (mask <= full) {
        if (syndrome_of(mask) == goal) {
          if (found == 0 || detail::lex_less(mask, best)) best = mask;
          ++found;
        }
        if (mask == full) break;
        const std::uint32_t next = detail::next_same_weight(mask);
        if (next <= mask) break;
        mask = next;
      }
    }
    if (found > 0) {
      Decoding d{BitVector(m), found > 1, found};
      for (std::size_t c = 0; c < m; ++c) d.error.set(c, ((best >> c) & 1U) != 0);
      return d;
    }
  }
  throw Error(ErrorCode::NoSolution, "no error pattern matches the syndrome");
}

// ---------------------------------------------------------------------------
// Toeplitz (diagonal-constant) universal hashing.

/// Hash family member: an out_len x in_len Toeplitz matrix given by its
/// defining sequence of length in_len + out_len - 1.
struct HashSpec {
  std::uint64_t seed = 0;
  std::size_t in_len = 0;
  std::size_t out_len = 0;
  BitVector defining;

  static std::size_t defining_length(std::size_t in_len, std::size_t out_len) noexcept {
    return in_len == 0 ? 0 : in_len + out_len - 1;
  }

  static HashSpec from_seed(std::uint64_t seed, std::size_t in_len, std::size_t out_len) {
    if (out_len > in_len) throw Error(ErrorCode::DimensionMismatch, "hash output longer than input");
    HashSpec spec{seed, in_len, out_len, BitVector(defining_length(in_len, out_len))};
    Rng rng(seed);
    for (auto& w : spec.defining.mutable_words()) w = rng.next();
    spec.defining.trim();
    return spec;
  }

  static HashSpec from_sequence(std::size_t in_len, std::size_t out_len, BitVector defining) {
    if (out_len > in_len) throw Error(ErrorCode::DimensionMismatch, "hash output longer than input");
    if (defining.size() != defining_length(in_len, out_len)) {
      throw Error(ErrorCode::DimensionMismatch, "defining sequence must have length in_len + out_len - 1");
    }
    return HashSpec{0, in_len, out_len, std::move(defining)};
  }
};

/// Output bit j = XOR_i D[j - i + in_len - 1] * v_i.
inline BitVector universal_hash(const HashSpec& spec, const BitVector& v) {
  using Word = BitVector::Word;
  if (v.size() != spec.in_len) throw Error(ErrorCode::DimensionMismatch, "hash input length differs from in_len");
  BitVector out(spec.out_len);
  if (spec.out_len == 0) return out;

  // With v reversed (r_k = v_{in_len-1-k}) row j is the window D[j, j + in_len).
  BitVector reversed(spec.in_len);
  for (std::size_t k = 0; k < spec.in_len; ++k) reversed.set(k, v[spec.in_len - 1 - k]);
  const auto rev = reversed.words();
  std::vector<Word> d(spec.defining.words().begin(), spec.defining.words().end());
  d.push_back(0);
  d.push_back(0);

  for (std::size_t j = 0; j < spec.out_len; ++j) {
    const std::size_t base = j / BitVector::kWordBits;
    const unsigned shift = static_cast<unsigned>(j % BitVector::kWordBits);
    Word acc = 0;
    if (shift == 0) {
      for (std::size_t w = 0; w < rev.size(); ++w) acc ^= d[base + w] & rev[w];
    } else {
      for (std::size_t w = 0; w < rev.size(); ++w) {
        const Word window = (d[base + w] >> shift) | (d[base + w + 1] << (64 - shift));
        acc ^= window & rev[w];
      }
    }
    out.set(j, (std::popcount(acc) & 1) != 0);
  }
  return out;
}

}  // namespace otpqkd

#endif
