#ifndef OTPQKD_PROTOCOL_HPP
#define OTPQKD_PROTOCOL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "otpqkd/bitvector.hpp"
#include "otpqkd/codec.hpp"
#include "otpqkd/errormodel.hpp"
#include "otpqkd/errors.hpp"
#include "otpqkd/infomath.hpp"
#include "otpqkd/keyrates.hpp"
#include "otpqkd/random.hpp"

namespace otpqkd {

enum class Protocol { SixState, BB84 };
enum class ReconciliationMode { IdealAccounting, ExplicitSmallBlock };

constexpr std::string_view to_string(Protocol p) noexcept { return p == Protocol::SixState ? "six-state" : "bb84"; }
constexpr std::string_view to_string(ReconciliationMode m) noexcept {
  return m == ReconciliationMode::IdealAccounting ? "ideal" : "explicit";
}

struct SessionConfig {
  Protocol protocol = Protocol::SixState;
  PauliRates channel;
  /// Sifted positions in the processed basis set.
  std::size_t n_signals = 10000;
  double test_fraction = 0.1;
  ReconciliationMode mode = ReconciliationMode::IdealAccounting;
  /// Blocks per parity-check chunk in explicit mode (m <= 24).
  std::size_t block_size_for_explicit = 24;
  double redundancy_factor = 1.15;
  double slack = 4.0;
  std::uint64_t seed = 1;
  /// 0 runs the one-time-pad preprocessing; k >= 1 runs k B-steps instead.
  std::size_t bstep_count = 0;

  /// Test bits taken from the processed set; chosen so the rest is even.
  std::size_t test_count() const noexcept {
    auto t = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(n_signals)));
    if ((n_signals - std::min(t, n_signals)) % 2 != 0) ++t;
    return std::min(t, n_signals);
  }

  std::size_t kept_count() const noexcept { return n_signals - test_count(); }

  void validate() const {
    channel.validate();
    if (n_signals % 2 != 0) throw Error(ErrorCode::ConfigError, "n_signals must be even");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
      throw Error(ErrorCode::ConfigError, "test_fraction must lie in (0,1)");
    }
    if (test_count() == 0) throw Error(ErrorCode::ConfigError, "test_fraction selects no test bits");
    if (kept_count() < 2) throw Error(ErrorCode::ConfigError, "test_fraction leaves fewer than 2 raw bits");
    if (mode == ReconciliationMode::ExplicitSmallBlock &&
        (block_size_for_explicit == 0 || block_size_for_explicit > kMaxDecodeLength)) {
      throw Error(ErrorCode::ConfigError, "explicit block size must lie in [1, 24]");
    }
    if (!(redundancy_factor >= 1.0) || !(slack >= 0.0)) {
      throw Error(ErrorCode::ConfigError, "redundancy_factor must be >= 1 and slack >= 0");
    }
  }
};

struct KeyLedger {
  std::size_t otp_consumed = 0;
  std::size_t final_even = 0;
  std::size_t final_odd0 = 0;
  std::size_t final_odd1 = 0;
  /// Key from the B-step path (one-way distillation of survivors).
  std::size_t final_oneway = 0;

  std::size_t final_total() const noexcept { return final_even + final_odd0 + final_odd1 + final_oneway; }
  long long net() const noexcept {
    return static_cast<long long>(final_total()) - static_cast<long long>(otp_consumed);
  }

  friend bool operator==(const KeyLedger&, const KeyLedger&) = default;
};

struct SessionReport {
  std::uint64_t seed = 0;
  Protocol protocol = Protocol::SixState;
  ReconciliationMode mode = ReconciliationMode::IdealAccounting;
  std::size_t bstep_count = 0;
  std::size_t n_test = 0;
  std::size_t n_kept = 0;

  KeyLedger ledger;
  ObservedRates observed;
  /// Analytic rate at the estimated channel that drove the abort decision.
  double estimated_rate = 0.0;

  std::size_t blocks_even = 0;
  std::size_t blocks_odd = 0;
  std::size_t odd0_count = 0;
  std::size_t odd1_count = 0;

  std::size_t decode_failures = 0;
  std::size_t ambiguous_ties = 0;

  std::size_t bstep_survivors = 0;
  /// I, X, Y, Z counts among B-step survivors.
  std::array<std::size_t, 4> survivor_pauli_counts{};

  bool keys_match = true;
  bool aborted = false;
  double empirical_net_rate = 0.0;
  std::size_t transcript_bytes = 0;

  friend bool operator==(const SessionReport&, const SessionReport&) = default;
};

// ---------------------------------------------------------------------------
// Transcript of the public classical channel.

enum class Direction { AliceToBob, BobToAlice };

enum class MessageKind { TestReveal, ParityMasked, ParityDifference, FirstBitAnnounce, BStepParity, HashSeed };

constexpr std::string_view to_string(Direction d) noexcept { return d == Direction::AliceToBob ? "A->B" : "B->A"; }

constexpr std::string_view to_string(MessageKind k) noexcept {
  switch (k) {
    case MessageKind::TestReveal: return "test-reveal";
    case MessageKind::ParityMasked: return "parity-masked";
    case MessageKind::ParityDifference: return "parity-difference";
    case MessageKind::FirstBitAnnounce: return "first-bit";
    case MessageKind::BStepParity: return "bstep-parity";
    case MessageKind::HashSeed: return "hash-seed";
  }
  return "unknown";
}

struct Message {
  Direction direction = Direction::AliceToBob;
  MessageKind kind = MessageKind::TestReveal;
  BitVector payload;
  /// Parity messages: public matrix seed, covered block range, pad offset.
  /// Hash messages: the hash seed.
  std::uint64_t seed = 0;
  std::size_t block_offset = 0;
  std::size_t block_count = 0;
  std::size_t pad_offset = 0;
  /// Parity messages: whether the matrix is streamed (ideal) or stored.
  bool streamed = false;

  std::size_t bytes() const noexcept { return (payload.size() + 7) / 8; }

  friend bool operator==(const Message&, const Message&) = default;
};

struct Transcript {
  std::vector<Message> messages;

  void send(Message m) { messages.push_back(std::move(m)); }

  std::size_t bytes() const noexcept {
    std::size_t total = 0;
    for (const Message& m : messages) total += m.bytes();
    return total;
  }

  /// One line per message: direction, kind, metadata, hex payload.
  std::string dump() const {
    std::ostringstream out;
    for (const Message& m : messages) {
      out << to_string(m.direction) << ' ' << to_string(m.kind) << " bits=" << m.payload.size();
      if (m.kind == MessageKind::ParityMasked || m.kind == MessageKind::ParityDifference) {
        out << " seed=" << m.seed << " blocks=" << m.block_offset << '+' << m.block_count;
      }
      if (m.kind == MessageKind::ParityMasked) out << " pad=" << m.pad_offset;
      if (m.kind == MessageKind::HashSeed) out << " seed=" << m.seed;
      out << " hex=" << m.payload.to_hex() << '\n';
    }
    return out.str();
  }

  friend bool operator==(const Transcript&, const Transcript&) = default;
};

/// Everything a session produced, for inspection beyond the report.
struct SessionTrace {
  SessionReport report;
  Transcript transcript;
  /// Alice's block parities c_i = x_{2i} xor x_{2i+1}.
  BitVector alice_blocks;
  /// Pre-shared pad bits drawn during the session, in consumption order.
  BitVector otp_pool;
  BitVector alice_key;
  BitVector bob_key;
};

namespace detail {

inline BitVector random_bits(std::size_t n, Rng& rng) {
  BitVector v(n);
  for (auto& w : v.mutable_words()) w = rng.next();
  v.trim();
  return v;
}

inline void append(BitVector& dst, const BitVector& src) {
  for (std::size_t i = 0; i < src.size(); ++i) dst.push_back(src[i]);
}

/// Pre-shared secret key, drawn on demand and never reused.
class OneTimePad {
public:
  explicit OneTimePad(std::uint64_t seed) : rng_(seed) {}

  BitVector take(std::size_t n) {
    BitVector out(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (bit_index_ == 0) buffer_ = rng_.next();
      out.set(i, ((buffer_ >> bit_index_) & 1U) != 0);
      bit_index_ = (bit_index_ + 1) % 64;
      pool_.push_back(out[i]);
    }
    return out;
  }

  std::size_t consumed() const noexcept { return pool_.size(); }
  const BitVector& pool() const noexcept { return pool_; }

private:
  Rng rng_;
  std::uint64_t buffer_ = 0;
  unsigned bit_index_ = 0;
  BitVector pool_;
};

inline double frequency(std::size_t hits, std::size_t total) {
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

/// Test-bit estimate of one basis set: Alice's and Bob's revealed bits go on
/// the transcript; returns the error frequency.
inline double reveal_test_bits(const BitVector& alice, const BitVector& bob, Transcript& transcript) {
  transcript.send({Direction::AliceToBob, MessageKind::TestReveal, alice});
  transcript.send({Direction::BobToAlice, MessageKind::TestReveal, bob});
  return frequency((alice ^ bob).popcount(), alice.size());
}

/// Six-state estimate; sampling noise can produce an unrealizable triple, in
/// which case negative weights are clamped and the rest renormalized.
inline PauliRates channel_from_estimates(const ObservedRates& obs) {
  try {
    return pauli_from_observed(obs);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Inconsistent) throw;
  }
  const double p_Y = *obs.p_Y;
  const double q_X = std::max(0.0, (obs.p_Z + p_Y - obs.p_X) / 2.0);
  const double q_Z = std::max(0.0, (obs.p_X + p_Y - obs.p_Z) / 2.0);
  const double q_Y = std::max(0.0, (obs.p_Z + obs.p_X - p_Y) / 2.0);
  const double q_I = std::max(0.0, 1.0 - q_X - q_Y - q_Z);
  const double total = q_I + q_X + q_Y + q_Z;
  return PauliRates{q_I / total, q_X / total, q_Y / total, q_Z / total};
}

inline std::size_t floor_length(double bits, std::size_t cap) {
  if (!(bits > 0.0)) return 0;
  return std::min(cap, static_cast<std::size_t>(std::floor(bits + 1e-9)));
}

/// Parity rows for ideal accounting: ceil(blocks * H(P_even, P_odd) + slack).
inline std::size_t ideal_parity_rows(const SessionConfig& cfg, std::size_t blocks, double p_odd) {
  const double rows = std::ceil(static_cast<double>(blocks) * entropy({1.0 - p_odd, p_odd}) + cfg.slack);
  return std::min(blocks, static_cast<std::size_t>(rows));
}

/// Parity rows for a decoded chunk of `blocks` blocks at estimated odd-block
/// rate: ceil(redundancy * blocks * H(P_even, P_odd) + slack).
inline std::size_t parity_rows(const SessionConfig& cfg, std::size_t blocks, double p_odd) {
  const double h = entropy({1.0 - p_odd, p_odd});
  const double rows = std::ceil(cfg.redundancy_factor * static_cast<double>(blocks) * h + cfg.slack);
  return std::min(blocks, static_cast<std::size_t>(rows));
}

inline void privacy_amplify(std::uint64_t seed, const BitVector& alice_in, const BitVector& bob_in, std::size_t out_len,
                            Transcript& transcript, BitVector& alice_key, BitVector& bob_key) {
  const HashSpec spec = HashSpec::from_seed(seed, alice_in.size(), out_len);
  BitVector seed_bits(64);
  for (std::size_t i = 0; i < 64; ++i) seed_bits.set(i, ((seed >> i) & 1U) != 0);
  Message m{Direction::AliceToBob, MessageKind::HashSeed, seed_bits};
  m.seed = seed;
  transcript.send(std::move(m));
  append(alice_key, universal_hash(spec, alice_in));
  append(bob_key, universal_hash(spec, bob_in));
}

// Stream identifiers for derive_seed.
enum Stream : std::uint64_t { kChannel = 0, kAliceBits, kTestChoice, kOtherBases, kPad, kMatrix, kHash };

}  // namespace detail

/// Runs one session and keeps the transcript, pad and keys.
inline SessionTrace run_session_traced(const SessionConfig& cfg) {
  cfg.validate();
  SessionTrace trace;
  SessionReport& rep = trace.report;
  Transcript& transcript = trace.transcript;
  rep.seed = cfg.seed;
  rep.protocol = cfg.protocol;
  rep.mode = cfg.mode;
  rep.bstep_count = cfg.bstep_count;

  const std::size_t n = cfg.n_signals;
  Rng channel_rng(derive_seed(cfg.seed, detail::kChannel));
  Rng alice_rng(derive_seed(cfg.seed, detail::kAliceBits));
  Rng test_rng(derive_seed(cfg.seed, detail::kTestChoice));
  Rng other_rng(derive_seed(cfg.seed, detail::kOtherBases));
  Rng matrix_rng(derive_seed(cfg.seed, detail::kMatrix));
  Rng hash_rng(derive_seed(cfg.seed, detail::kHash));
  detail::OneTimePad pad(derive_seed(cfg.seed, detail::kPad));

  // (a) raw bits of the processed basis set.
  const ErrorString errors = sample_errors(cfg.channel, n, channel_rng);
  const BitVector alice_all = detail::random_bits(n, alice_rng);
  const BitVector bob_all = alice_all ^ errors.bit_flags;

  // (b) test bits, sampled without replacement.
  const std::size_t n_test = cfg.test_count();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < n_test; ++i) std::swap(order[i], order[i + test_rng.below(n - i)]);
  std::vector<bool> tested(n, false);
  for (std::size_t i = 0; i < n_test; ++i) tested[order[i]] = true;

  BitVector alice_test;
  BitVector bob_test;
  std::vector<std::size_t> kept;
  kept.reserve(n - n_test);
  for (std::size_t i = 0; i < n; ++i) {
    if (tested[i]) {
      alice_test.push_back(alice_all[i]);
      bob_test.push_back(bob_all[i]);
    } else {
      kept.push_back(i);
    }
  }
  rep.n_test = n_test;
  rep.n_kept = kept.size();

  rep.observed.p_Z = detail::reveal_test_bits(alice_test, bob_test, transcript);
  {
    // Test bits of the other basis sets: X-basis errors are phase flags,
    // Y-basis errors are bit xor phase.
    const ErrorString x_set = sample_errors(cfg.channel, n_test, other_rng);
    const BitVector x_alice = detail::random_bits(n_test, other_rng);
    rep.observed.p_X = detail::reveal_test_bits(x_alice, x_alice ^ x_set.phase_flags, transcript);
    if (cfg.protocol == Protocol::SixState) {
      const ErrorString y_set = sample_errors(cfg.channel, n_test, other_rng);
      const BitVector y_alice = detail::random_bits(n_test, other_rng);
      rep.observed.p_Y =
          detail::reveal_test_bits(y_alice, y_alice ^ y_set.bit_flags ^ y_set.phase_flags, transcript);
    }
  }

  // Channel used for key lengths, and the abort decision.
  PauliRates estimate;
  std::optional<double> bb84_survivor_rate;
  const bool bb84_in_range = rep.observed.p_Z <= 0.5 && rep.observed.p_X <= 0.5;
  if (cfg.protocol == Protocol::SixState) {
    estimate = detail::channel_from_estimates(rep.observed);
    if (cfg.bstep_count == 0) {
      rep.estimated_rate = proposed_net_rate(estimate);
    } else {
      PauliRates q = estimate;
      double yield = 1.0;
      for (std::size_t k = 0; k < cfg.bstep_count; ++k) {
        const BStepOutcome step = bstep(q);
        q = step.survived;
        yield *= step.yield_factor;
      }
      rep.estimated_rate = yield * oneway_rate(q);
    }
  } else if (bb84_in_range) {
    if (cfg.bstep_count == 0) {
      const WorstCaseRate w = bb84_proposed_net_rate(rep.observed.p_Z, rep.observed.p_X);
      rep.estimated_rate = w.rate;
      estimate = bb84_worst_case_family(rep.observed.p_Z, rep.observed.p_X, w.alpha);
    } else {
      const WorstCaseRate w = bb84_bstep_rate(rep.observed.p_Z, rep.observed.p_X, cfg.bstep_count);
      rep.estimated_rate = w.rate;
      estimate = bb84_worst_case_family(rep.observed.p_Z, rep.observed.p_X, w.alpha);
      bb84_survivor_rate = w.rate;
    }
  } else {
    rep.estimated_rate = -1.0;
  }
  if (!(rep.estimated_rate > 0.0)) {
    rep.aborted = true;
    rep.transcript_bytes = transcript.bytes();
    return trace;
  }

  BitVector alice_raw(kept.size());
  BitVector bob_raw(kept.size());
  BitVector bit_err(kept.size());
  BitVector phase_err(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    alice_raw.set(i, alice_all[kept[i]]);
    bob_raw.set(i, bob_all[kept[i]]);
    bit_err.set(i, errors.bit_flags[kept[i]]);
    phase_err.set(i, errors.phase_flags[kept[i]]);
  }
  const std::size_t n_kept = kept.size();
  const std::size_t n_blocks = n_kept / 2;

  if (cfg.bstep_count > 0) {
    // Each B-step pairs neighbours, both parties announce the pair parity and
    // the first position survives when the parities agree.
    std::vector<std::size_t> alive(n_kept);
    std::iota(alive.begin(), alive.end(), std::size_t{0});
    BitVector phase = phase_err;
    for (std::size_t step = 0; step < cfg.bstep_count; ++step) {
      const std::size_t pairs = alive.size() / 2;
      BitVector alice_par(pairs);
      BitVector bob_par(pairs);
      std::vector<std::size_t> next;
      next.reserve(pairs);
      for (std::size_t p = 0; p < pairs; ++p) {
        const std::size_t a = alive[2 * p];
        const std::size_t b = alive[2 * p + 1];
        alice_par.set(p, alice_raw[a] != alice_raw[b]);
        bob_par.set(p, bob_raw[a] != bob_raw[b]);
        if (alice_par[p] == bob_par[p]) {
          phase.set(a, phase[a] != phase[b]);
          next.push_back(a);
        }
      }
      transcript.send({Direction::AliceToBob, MessageKind::BStepParity, alice_par});
      transcript.send({Direction::BobToAlice, MessageKind::BStepParity, bob_par});
      if (step == 0) {
        rep.blocks_even = next.size();
        rep.blocks_odd = pairs - next.size();
      }
      alive = std::move(next);
    }
    rep.bstep_survivors = alive.size();

    BitVector alice_in(alive.size());
    BitVector bob_in(alive.size());
    for (std::size_t i = 0; i < alive.size(); ++i) {
      const std::size_t pos = alive[i];
      const bool bit = bit_err[pos];
      ++rep.survivor_pauli_counts[static_cast<std::size_t>(pauli_from_flags(bit, phase[pos]))];
      alice_in.set(i, alice_raw[pos]);
      // Ideal one-way error correction.
      bob_in.set(i, bob_raw[pos] != bit);
    }

    double per_survivor = 0.0;
    if (cfg.protocol == Protocol::SixState) {
      PauliRates q = estimate;
      for (std::size_t k = 0; k < cfg.bstep_count; ++k) q = bstep(q).survived;
      per_survivor = oneway_rate(q);
    } else {
      // Undo the yield product folded into the worst-case rate.
      double survival = 1.0;
      PauliRates q = estimate;
      for (std::size_t k = 0; k < cfg.bstep_count; ++k) {
        const BStepOutcome step = bstep(q);
        survival *= step.yield_factor;
        q = step.survived;
      }
      per_survivor = *bb84_survivor_rate / survival;
    }
    rep.ledger.final_oneway =
        detail::floor_length(static_cast<double>(alive.size()) * per_survivor, alive.size());
    detail::privacy_amplify(hash_rng.next(), alice_in, bob_in, rep.ledger.final_oneway, transcript, trace.alice_key,
                            trace.bob_key);
  } else {
    // (c) block parities and OTP-masked parity exchange.
    BitVector c(n_blocks);
    BitVector c_bob(n_blocks);
    for (std::size_t i = 0; i < n_blocks; ++i) {
      c.set(i, alice_raw[2 * i] != alice_raw[2 * i + 1]);
      c_bob.set(i, bob_raw[2 * i] != bob_raw[2 * i + 1]);
    }
    const BitVector true_diff = c ^ c_bob;
    const double p_Z_est = rep.observed.p_Z;
    const double p_odd_est = 2.0 * p_Z_est * (1.0 - p_Z_est);

    BitVector diff(n_blocks);
    const auto exchange = [&](std::size_t offset, std::size_t count, std::size_t rows, std::uint64_t seed,
                              bool streamed, const ParityCheckMatrix* matrix) {
      const BitVector cs = c.slice(offset, count);
      const BitVector cbs = c_bob.slice(offset, count);
      BitVector syn_alice;
      BitVector syn_bob;
      if (streamed) {
        auto syn = streamed_syndromes(seed, rows, {&cs, &cbs});
        syn_alice = std::move(syn[0]);
        syn_bob = std::move(syn[1]);
      } else {
        syn_alice = syndrome(*matrix, cs);
        syn_bob = syndrome(*matrix, cbs);
      }
      Message masked{Direction::AliceToBob, MessageKind::ParityMasked, BitVector()};
      masked.seed = seed;
      masked.block_offset = offset;
      masked.block_count = count;
      masked.pad_offset = pad.consumed();
      masked.streamed = streamed;
      const BitVector pad_bits = pad.take(rows);
      masked.payload = otp_mask(syn_alice, pad_bits);
      // Bob removes the pad and answers with the parity difference.
      const BitVector t = otp_mask(masked.payload, pad_bits) ^ syn_bob;
      Message reply{Direction::BobToAlice, MessageKind::ParityDifference, t};
      reply.seed = seed;
      reply.block_offset = offset;
      reply.block_count = count;
      reply.streamed = streamed;
      transcript.send(std::move(masked));
      transcript.send(std::move(reply));
      return t;
    };

    if (cfg.mode == ReconciliationMode::IdealAccounting) {
      // Asymptotic charge at the realized odd-block fraction, no redundancy.
      const double p_odd_emp = detail::frequency(true_diff.popcount(), n_blocks);
      const std::size_t rows = detail::ideal_parity_rows(cfg, n_blocks, p_odd_emp);
      exchange(0, n_blocks, rows, matrix_rng.next(), true, nullptr);
      diff = true_diff;
    } else {
      const std::size_t m = cfg.block_size_for_explicit;
      for (std::size_t offset = 0; offset < n_blocks; offset += m) {
        const std::size_t count = std::min(m, n_blocks - offset);
        const std::size_t rows = detail::parity_rows(cfg, count, p_odd_est);
        const std::uint64_t seed = matrix_rng.next();
        const ParityCheckMatrix matrix = random_parity_matrix(rows, count, seed);
        const BitVector t = exchange(offset, count, rows, seed, false, &matrix);
        bool failed = false;
        try {
          const Decoding d = decode_syndrome(matrix, t, std::clamp(p_odd_est, 1e-9, 0.5 - 1e-9));
          if (d.ambiguous_tie) ++rep.ambiguous_ties;
          for (std::size_t i = 0; i < count; ++i) diff.set(offset + i, d.error[i]);
          failed = d.error != true_diff.slice(offset, count);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::NoSolution) throw;
          failed = true;
        }
        if (failed) ++rep.decode_failures;
      }
    }

    // (d) even blocks, (e) odd blocks split by first-bit agreement.
    BitVector even_alice;
    BitVector even_bob;
    BitVector odd0_alice;
    BitVector odd0_bob;
    BitVector odd1_alice;
    BitVector odd1_bob;
    BitVector first_alice;
    BitVector first_bob;
    for (std::size_t i = 0; i < n_blocks; ++i) {
      const std::size_t a = 2 * i;
      const std::size_t b = a + 1;
      if (!diff[i]) {
        // Even-block errors come in pairs; ideal correction of the first
        // bit's error is applied to both bits.
        const bool flip = bit_err[a];
        even_alice.push_back(alice_raw[a]);
        even_alice.push_back(alice_raw[b]);
        even_bob.push_back(bob_raw[a] != flip);
        even_bob.push_back(bob_raw[b] != flip);
      } else {
        first_alice.push_back(alice_raw[a]);
        first_bob.push_back(bob_raw[a]);
        if (alice_raw[a] == bob_raw[a]) {
          odd0_alice.push_back(alice_raw[b]);
          odd0_bob.push_back(!bob_raw[b]);
        } else {
          odd1_alice.push_back(alice_raw[b]);
          odd1_bob.push_back(bob_raw[b]);
        }
      }
    }
    transcript.send({Direction::AliceToBob, MessageKind::FirstBitAnnounce, first_alice});
    transcript.send({Direction::BobToAlice, MessageKind::FirstBitAnnounce, first_bob});

    rep.blocks_odd = first_alice.size();
    rep.blocks_even = n_blocks - rep.blocks_odd;
    rep.odd0_count = odd0_alice.size();
    rep.odd1_count = odd1_alice.size();
    rep.ledger.otp_consumed = pad.consumed();

    // (f) privacy amplification per branch.
    rep.ledger.final_even = detail::floor_length(
        static_cast<double>(rep.blocks_even) * (2.0 - even_block_entropy(estimate)), even_alice.size());
    rep.ledger.final_odd0 =
        detail::floor_length(static_cast<double>(rep.odd0_count) * (1.0 - odd0_entropy(estimate)), rep.odd0_count);
    rep.ledger.final_odd1 =
        detail::floor_length(static_cast<double>(rep.odd1_count) * (1.0 - odd1_entropy(estimate)), rep.odd1_count);
    detail::privacy_amplify(hash_rng.next(), even_alice, even_bob, rep.ledger.final_even, transcript, trace.alice_key,
                            trace.bob_key);
    detail::privacy_amplify(hash_rng.next(), odd0_alice, odd0_bob, rep.ledger.final_odd0, transcript, trace.alice_key,
                            trace.bob_key);
    detail::privacy_amplify(hash_rng.next(), odd1_alice, odd1_bob, rep.ledger.final_odd1, transcript, trace.alice_key,
                            trace.bob_key);
    trace.alice_blocks = std::move(c);
  }

  trace.otp_pool = pad.pool();
  rep.keys_match = trace.alice_key == trace.bob_key;
  rep.empirical_net_rate = static_cast<double>(rep.ledger.net()) / static_cast<double>(n_kept);
  rep.transcript_bytes = transcript.bytes();
  return trace;
}

inline SessionReport run_session(const SessionConfig& cfg) { return run_session_traced(cfg).report; }

/// B-step path of `run_session`; requires `bstep_count >= 1`.
inline SessionReport run_bstep_session(const SessionConfig& cfg) {
  if (cfg.bstep_count == 0) throw Error(ErrorCode::ConfigError, "run_bstep_session needs bstep_count >= 1");
  return run_session(cfg);
}

/// Checks that every Alice-to-Bob parity message is the syndrome of Alice's
/// block parities masked by a fresh, never reused slice of the pad.
inline bool parity_messages_masked(const SessionTrace& trace) {
  std::size_t next_pad = 0;
  for (const Message& m : trace.transcript.messages) {
    if (m.direction != Direction::AliceToBob) continue;
    if (m.kind != MessageKind::ParityMasked) continue;
    const std::size_t rows = m.payload.size();
    if (m.pad_offset != next_pad || m.pad_offset + rows > trace.otp_pool.size()) return false;
    if (m.block_offset + m.block_count > trace.alice_blocks.size()) return false;
    const BitVector blocks = trace.alice_blocks.slice(m.block_offset, m.block_count);
    BitVector syn;
    if (m.streamed) {
      syn = std::move(streamed_syndromes(m.seed, rows, {&blocks})[0]);
    } else {
      syn = syndrome(random_parity_matrix(rows, m.block_count, m.seed), blocks);
    }
    if (m.payload != otp_mask(syn, trace.otp_pool.slice(m.pad_offset, rows))) return false;
    next_pad += rows;
  }
  return next_pad == trace.otp_pool.size();
}

// ---------------------------------------------------------------------------
// Batches.

/// Seed for trial i; trial 0 keeps the configured seed.
constexpr std::uint64_t trial_seed(std::uint64_t seed, std::size_t trial) noexcept {
  return seed + kGoldenGamma * static_cast<std::uint64_t>(trial);
}

struct BatchResult {
  SessionConfig config;
  std::vector<SessionReport> trials;
  double mean_net_rate = 0.0;
  double stddev_net_rate = 0.0;
  /// stddev / sqrt(trials).
  double stderr_net_rate = 0.0;
  bool all_keys_match = true;
};

inline BatchResult summarize(SessionConfig cfg, std::vector<SessionReport> trials) {
  BatchResult out;
  out.config = cfg;
  const double count = static_cast<double>(trials.size());
  double sum = 0.0;
  for (const SessionReport& r : trials) {
    sum += r.empirical_net_rate;
    out.all_keys_match = out.all_keys_match && r.keys_match;
  }
  out.mean_net_rate = sum / count;
  if (trials.size() > 1) {
    double ss = 0.0;
    for (const SessionReport& r : trials) ss += (r.empirical_net_rate - out.mean_net_rate) * (r.empirical_net_rate - out.mean_net_rate);
    out.stddev_net_rate = std::sqrt(ss / (count - 1.0));
    out.stderr_net_rate = out.stddev_net_rate / std::sqrt(count);
  }
  out.trials = std::move(trials);
  return out;
}

/// Runs every configuration `trials_each` times. Sessions run concurrently;
/// results are ordered by (config, trial) and independent of thread count.
inline std::vector<BatchResult> batch(const std::vector<SessionConfig>& cfgs, std::size_t trials_each,
                                      unsigned threads = 0) {
  if (trials_each == 0) throw Error(ErrorCode::ConfigError, "batch needs at least one trial");
  for (const SessionConfig& c : cfgs) c.validate();
  const std::size_t total = cfgs.size() * trials_each;
  std::vector<SessionReport> reports(total);
  std::vector<std::exception_ptr> failures(total);

  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, total));
  const auto work = [&](std::size_t worker) {
    for (std::size_t job = worker; job < total; job += threads) {
      SessionConfig c = cfgs[job / trials_each];
      c.seed = trial_seed(c.seed, job % trials_each);
      try {
        reports[job] = run_session(c);
      } catch (...) {
        failures[job] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (std::thread& t : pool) t.join();
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  std::vector<BatchResult> results;
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    std::vector<SessionReport> slice(reports.begin() + static_cast<std::ptrdiff_t>(i * trials_each),
                                     reports.begin() + static_cast<std::ptrdiff_t>((i + 1) * trials_each));
    results.push_back(summarize(cfgs[i], std::move(slice)));
  }
  return results;
}

}  // namespace otpqkd

#endif
