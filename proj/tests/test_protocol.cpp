#include <gtest/gtest.h>

#include <cmath>

#include "otpqkd/protocol.hpp"

namespace otpqkd {
namespace {

SessionConfig config(double p, std::size_t n, std::uint64_t seed = 1) {
  SessionConfig c;
  c.channel = depolarizing(p);
  c.n_signals = n;
  c.seed = seed;
  return c;
}

TEST(Session, NoiselessChannel) {
  const SessionTrace t = run_session_traced(config(0.0, 2000));
  const SessionReport& r = t.report;
  EXPECT_FALSE(r.aborted);
  EXPECT_TRUE(r.keys_match);
  EXPECT_EQ(r.n_test, 200U);
  EXPECT_EQ(r.n_kept, 1800U);
  EXPECT_EQ(r.blocks_odd, 0U);
  EXPECT_EQ(r.blocks_even, 900U);
  EXPECT_EQ(r.ledger.otp_consumed, 4U);
  EXPECT_EQ(r.ledger.final_even, 1800U);
  EXPECT_EQ(t.alice_key, t.bob_key);
  EXPECT_EQ(t.alice_key.size(), r.ledger.final_total());
  EXPECT_NEAR(r.empirical_net_rate, (1800.0 - 4.0) / 1800.0, 1e-15);
}

TEST(Session, DeterministicPerSeed) {
  for (ReconciliationMode mode : {ReconciliationMode::IdealAccounting, ReconciliationMode::ExplicitSmallBlock}) {
    SessionConfig c = config(0.03, 4000, 9);
    c.mode = mode;
    const SessionTrace a = run_session_traced(c);
    const SessionTrace b = run_session_traced(c);
    EXPECT_EQ(a.report, b.report);
    EXPECT_EQ(a.transcript.dump(), b.transcript.dump());
    EXPECT_EQ(a.alice_key, b.alice_key);
    c.seed = 10;
    EXPECT_NE(run_session_traced(c).alice_key, a.alice_key);
  }
}

TEST(Session, IdealModeApproachesAnalyticRate) {
  const SessionConfig c = config(0.03, 40000, 3);
  const BatchResult b = batch({c}, 5).front();
  EXPECT_TRUE(b.all_keys_match);
  EXPECT_NEAR(b.mean_net_rate, proposed_net_rate(depolarizing(0.03)), 0.02);
  for (const SessionReport& r : b.trials) {
    EXPECT_EQ(r.blocks_even + r.blocks_odd, r.n_kept / 2);
    EXPECT_EQ(r.odd0_count + r.odd1_count, r.blocks_odd);
    EXPECT_EQ(r.ledger.final_oneway, 0U);
  }
}

TEST(Session, MeansExceedOneWayAcrossNoise) {
  for (double p : {0.01, 0.03, 0.05}) {
    const BatchResult b = batch({config(p, 200000, 21)}, 2).front();
    EXPECT_GT(b.mean_net_rate, oneway_rate(depolarizing(p))) << p;
  }
}

TEST(Session, HighNoiseAborts) {
  const SessionReport r = run_session(config(0.2, 4000));
  EXPECT_TRUE(r.aborted);
  EXPECT_TRUE(r.keys_match);
  EXPECT_EQ(r.ledger.net(), 0);
  EXPECT_LE(r.estimated_rate, 0.0);
}

TEST(Session, BB84ProtocolRuns) {
  SessionConfig c = config(0.03, 20000, 4);
  c.protocol = Protocol::BB84;
  const SessionReport r = run_session(c);
  EXPECT_FALSE(r.aborted);
  EXPECT_TRUE(r.keys_match);
  EXPECT_FALSE(r.observed.p_Y.has_value());
  EXPECT_NEAR(r.estimated_rate, bb84_proposed_net_rate(r.observed.p_Z, r.observed.p_X).rate, 1e-12);
}

TEST(Session, ExplicitModeReconciles) {
  SessionConfig c = config(0.03, 480, 1);
  c.mode = ReconciliationMode::ExplicitSmallBlock;
  c.test_fraction = 0.9;
  std::size_t matched = 0;
  for (std::size_t i = 0; i < 40; ++i) {
    c.seed = trial_seed(1, i);
    const SessionTrace t = run_session_traced(c);
    matched += t.report.keys_match && !t.report.aborted ? 1 : 0;
    if (!t.report.keys_match) {
      EXPECT_GT(t.report.decode_failures, 0U);
    }
    EXPECT_TRUE(parity_messages_masked(t));
  }
  EXPECT_GE(matched, 34U);
}

TEST(BStepSession, SurvivorStatisticsMatchRecursion) {
  SessionConfig c = config(0.05, 200000, 6);
  c.bstep_count = 1;
  const SessionReport r = run_bstep_session(c);
  ASSERT_FALSE(r.aborted);
  EXPECT_TRUE(r.keys_match);
  const BStepOutcome step = bstep(c.channel);
  const double pairs = static_cast<double>(r.n_kept / 2);
  const double sigma = std::sqrt(step.survival_prob * (1 - step.survival_prob) / pairs);
  EXPECT_LE(std::abs(r.bstep_survivors / pairs - step.survival_prob), 3 * sigma);
  const double survivors = static_cast<double>(r.bstep_survivors);
  for (Pauli p : {Pauli::I, Pauli::X, Pauli::Y, Pauli::Z}) {
    const double q = step.survived[p];
    const double s = std::sqrt(q * (1 - q) / survivors);
    EXPECT_LE(std::abs(r.survivor_pauli_counts[static_cast<std::size_t>(p)] / survivors - q), 3 * s)
        << static_cast<int>(p);
  }
  EXPECT_GT(r.ledger.final_oneway, 0U);
  EXPECT_EQ(r.ledger.otp_consumed, 0U);
}

TEST(BStepSession, RecoversKeyBeyondOneWayThreshold) {
  SessionConfig c = config(0.07, 100000, 2);
  c.bstep_count = 2;
  const SessionReport r = run_session(c);
  EXPECT_FALSE(r.aborted);
  EXPECT_TRUE(r.keys_match);
  EXPECT_GT(r.ledger.net(), 0);
  EXPECT_THROW(run_bstep_session(config(0.03, 1000)), Error);
}

TEST(Batch, SingleTrialEqualsSession) {
  const SessionConfig c = config(0.03, 4000, 77);
  const BatchResult b = batch({c}, 1).front();
  ASSERT_EQ(b.trials.size(), 1U);
  EXPECT_EQ(b.trials.front(), run_session(c));
  EXPECT_EQ(b.stddev_net_rate, 0.0);
}

TEST(Batch, IndependentOfThreadCount) {
  const SessionConfig c = config(0.03, 2000, 5);
  const BatchResult one = batch({c}, 6, 1).front();
  const BatchResult four = batch({c}, 6, 4).front();
  EXPECT_EQ(one.trials, four.trials);
  EXPECT_EQ(one.mean_net_rate, four.mean_net_rate);
  EXPECT_EQ(one.trials[2].seed, trial_seed(5, 2));
}

TEST(Batch, StandardErrorShrinksWithTrials) {
  const SessionConfig c = config(0.03, 2000, 13);
  EXPECT_EQ(batch({c, c, c}, 1).size(), 3U);
  const double se10 = batch({c}, 10).front().stderr_net_rate;
  const double se40 = batch({c}, 40).front().stderr_net_rate;
  const double se160 = batch({c}, 160).front().stderr_net_rate;
  EXPECT_GT(se10, 0.0);
  // Expected ratio 2 per fourfold increase.
  EXPECT_GT(se10 / se40, 1.2);
  EXPECT_LT(se10 / se40, 3.5);
  EXPECT_GT(se40 / se160, 1.4);
  EXPECT_LT(se40 / se160, 2.8);
  EXPECT_THROW(batch({c}, 0), Error);
}

TEST(Transcript, ParityMessagesAreMasked) {
  SessionTrace t = run_session_traced(config(0.03, 8000, 2));
  EXPECT_TRUE(parity_messages_masked(t));
  std::size_t masked = 0;
  for (const Message& m : t.transcript.messages) masked += m.kind == MessageKind::ParityMasked ? 1 : 0;
  EXPECT_EQ(masked, 1U);
  EXPECT_EQ(t.otp_pool.size(), t.report.ledger.otp_consumed);

  for (Message& m : t.transcript.messages) {
    if (m.kind == MessageKind::ParityMasked) m.payload.flip(0);
  }
  EXPECT_FALSE(parity_messages_masked(t));
}

TEST(Config, Validation) {
  SessionConfig c = config(0.03, 1001);
  EXPECT_THROW(c.validate(), Error);
  c.n_signals = 1000;
  c.test_fraction = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c.test_fraction = 0.1;
  c.mode = ReconciliationMode::ExplicitSmallBlock;
  c.block_size_for_explicit = 25;
  EXPECT_THROW(c.validate(), Error);
  c.block_size_for_explicit = 24;
  c.redundancy_factor = 0.9;
  EXPECT_THROW(c.validate(), Error);
  c.redundancy_factor = 1.15;
  EXPECT_NO_THROW(c.validate());

  SessionConfig odd = config(0.03, 1000);
  odd.test_fraction = 0.1015;
  EXPECT_EQ(odd.test_count(), 102U);
  EXPECT_EQ(odd.kept_count() % 2, 0U);
}

}  // namespace
}  // namespace otpqkd
