#include <gtest/gtest.h>

#include <cmath>

#include "otpqkd/errormodel.hpp"

namespace otpqkd {
namespace {

void expect_rates(const PauliRates& q, double i, double x, double y, double z, double tol = 1e-12) {
  EXPECT_NEAR(q.q_I, i, tol);
  EXPECT_NEAR(q.q_X, x, tol);
  EXPECT_NEAR(q.q_Y, y, tol);
  EXPECT_NEAR(q.q_Z, z, tol);
}

TEST(Depolarizing, Parameterization) {
  expect_rates(depolarizing(0.0), 1, 0, 0, 0);
  expect_rates(depolarizing(0.03), 0.91, 0.03, 0.03, 0.03);
  expect_rates(depolarizing(1.0 / 3.0), 0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
  EXPECT_THROW(depolarizing(0.34), Error);
  EXPECT_THROW(depolarizing(-0.01), Error);
}

TEST(ObservedFromPauli, BasisSums) {
  const ObservedRates none = observed_from_pauli(depolarizing(0.0));
  EXPECT_EQ(none.p_X, 0.0);
  EXPECT_EQ(*none.p_Y, 0.0);
  EXPECT_EQ(none.p_Z, 0.0);

  const ObservedRates dep = observed_from_pauli(depolarizing(0.03));
  EXPECT_NEAR(dep.p_X, 0.06, 1e-15);
  EXPECT_NEAR(*dep.p_Y, 0.06, 1e-15);
  EXPECT_NEAR(dep.p_Z, 0.06, 1e-15);

  const ObservedRates o = observed_from_pauli(PauliRates::make(0.7, 0.1, 0.05, 0.15));
  EXPECT_NEAR(o.p_Z, 0.15, 1e-15);
  EXPECT_NEAR(o.p_X, 0.20, 1e-15);
  EXPECT_NEAR(*o.p_Y, 0.25, 1e-15);
}

TEST(PauliFromObserved, InvertsAndRejects) {
  expect_rates(pauli_from_observed({0.06, 0.06, 0.06}), 0.91, 0.03, 0.03, 0.03);
  expect_rates(pauli_from_observed({0.0, 0.0, 0.0}), 1, 0, 0, 0);
  try {
    pauli_from_observed({0.5, 0.0, 0.0});
    FAIL() << "expected Inconsistent";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Inconsistent);
  }
  // BB84 observations do not determine the channel.
  EXPECT_THROW(pauli_from_observed({0.05, std::nullopt, 0.05}), Error);
}

TEST(PauliFromObserved, RoundTripOnSimplexGrid) {
  const int steps = 20;
  for (int a = 0; a <= steps; ++a) {
    for (int b = 0; a + b <= steps; ++b) {
      for (int c = 0; a + b + c <= steps; ++c) {
        const double x = a / double(steps), y = b / double(steps), z = c / double(steps);
        const PauliRates q{std::max(0.0, 1.0 - x - y - z), x, y, z};
        const PauliRates back = pauli_from_observed(observed_from_pauli(q));
        expect_rates(back, q.q_I, q.q_X, q.q_Y, q.q_Z);
      }
    }
  }
}

TEST(WorstCaseFamily, EndpointsAndObservedInvariance) {
  expect_rates(bb84_worst_case_family(0.1, 0.05, 0.0), 0.85, 0.1, 0.0, 0.05);
  expect_rates(bb84_worst_case_family(0.06, 0.06, 0.03), 0.91, 0.03, 0.03, 0.03);
  expect_rates(bb84_worst_case_family(0.1, 0.05, 0.05), 0.90, 0.05, 0.05, 0.0);
  EXPECT_THROW(bb84_worst_case_family(0.1, 0.05, 0.06), Error);
  EXPECT_THROW(bb84_worst_case_family(0.1, 0.05, -1e-3), Error);

  for (double p_Z : {0.0, 0.02, 0.11, 0.3}) {
    for (double p_X : {0.0, 0.05, 0.2}) {
      const double hi = std::min(p_Z, p_X);
      for (int k = 0; k <= 10; ++k) {
        const double alpha = hi * k / 10.0;
        const ObservedRates o = observed_from_pauli(bb84_worst_case_family(p_Z, p_X, alpha));
        EXPECT_NEAR(o.p_Z, p_Z, 1e-15);
        EXPECT_NEAR(o.p_X, p_X, 1e-15);
      }
    }
  }
}

TEST(SampleErrors, DegenerateChannels) {
  const ErrorString none = sample_errors(depolarizing(0.0), 100, 5);
  EXPECT_FALSE(none.bit_flags.any());
  EXPECT_FALSE(none.phase_flags.any());

  const ErrorString xs = sample_errors(PauliRates::make(0, 1, 0, 0), 4, 5);
  EXPECT_EQ(xs.bit_flags.to_string(), "1111");
  EXPECT_EQ(xs.phase_flags.to_string(), "0000");

  const ErrorString ys = sample_errors(PauliRates::make(0, 0, 1, 0), 3, 9);
  EXPECT_EQ(ys.bit_flags.to_string(), "111");
  EXPECT_EQ(ys.phase_flags.to_string(), "111");

  EXPECT_THROW(sample_errors(depolarizing(0.1), 0, 1), Error);
}

TEST(SampleErrors, DeterministicPerSeed) {
  const PauliRates q = depolarizing(0.1);
  const ErrorString a = sample_errors(q, 5000, 42);
  const ErrorString b = sample_errors(q, 5000, 42);
  const ErrorString c = sample_errors(q, 5000, 43);
  EXPECT_EQ(a.bit_flags, b.bit_flags);
  EXPECT_EQ(a.phase_flags, b.phase_flags);
  EXPECT_NE(a.bit_flags, c.bit_flags);
}

TEST(SampleErrors, FrequenciesWithinFourSigma) {
  const PauliRates q = depolarizing(0.03);
  const std::size_t n = 1'000'000;
  const auto counts = sample_errors(q, n, 2024).counts();
  for (Pauli p : {Pauli::I, Pauli::X, Pauli::Y, Pauli::Z}) {
    const double expected = q[p];
    const double sigma = std::sqrt(expected * (1 - expected) / n);
    const double freq = counts[static_cast<std::size_t>(p)] / double(n);
    EXPECT_LE(std::abs(freq - expected), 4 * sigma) << static_cast<int>(p);
  }
}

TEST(SampleErrors, LawOfLargeNumbersOverSeeds) {
  const PauliRates q = PauliRates::make(0.7, 0.1, 0.05, 0.15);
  const std::size_t n = 200'000;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto counts = sample_errors(q, n, seed).counts();
    for (Pauli p : {Pauli::I, Pauli::X, Pauli::Y, Pauli::Z}) {
      const double sigma = std::sqrt(q[p] * (1 - q[p]) / n);
      EXPECT_LE(std::abs(counts[static_cast<std::size_t>(p)] / double(n) - q[p]), 4 * sigma);
    }
  }
}

TEST(PauliRates, ValidateRejects) {
  EXPECT_THROW(PauliRates::make(0.5, 0.5, 0.5, -0.5), Error);
  EXPECT_THROW(PauliRates::make(0.5, 0.1, 0.1, 0.1), Error);
  EXPECT_NO_THROW(PauliRates::make(0.25, 0.25, 0.25, 0.25));
}

}  // namespace
}  // namespace otpqkd
