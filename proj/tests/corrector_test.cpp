#include "micdist/corrector.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "micdist/error.hpp"
#include "micdist/model.hpp"
#include "oracles.hpp"

namespace micdist {
namespace {

constexpr double kK0 = 8.85;
constexpr double kFs = 48000.0;
constexpr std::size_t kN = 1u << 16;

CorrectionConfig exact_cfg(double k0 = kK0,
                           ClampPolicy policy = ClampPolicy::kClampToVertex) {
  return {k0, CorrectionMethod::kExactSqrt, policy};
}
CorrectionConfig approx_cfg(double k0 = kK0) {
  return {k0, CorrectionMethod::kQuadraticApprox, ClampPolicy::kClampToVertex};
}

SampledSignal volts(std::vector<double> v) {
  return SampledSignal(std::move(v), kFs, Unit::kVolts);
}

SampledSignal capsule_output(double ym) {
  return simulate(SampledSignal(oracle::sine(kN, 1365, ym), kFs,
                                Unit::kDimensionless),
                  MicParams::defaults(), {});
}

TEST(CorrectExact, ZeroIsFixedPoint) {
  const auto r = correct_exact(volts(std::vector<double>(32, 0.0)), exact_cfg());
  for (double v : r.signal.samples()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(r.stats.domain_clamps, 0u);
  EXPECT_EQ(r.stats.samples_processed, 32u);
}

TEST(CorrectExact, RecoversLinearSample) {
  const double u = oracle::forward(0.1, kK0);
  EXPECT_NEAR(u, 0.098870056, 1e-9);
  bool clamped = true;
  EXPECT_NEAR(correct_sample_exact(u, kK0, clamped), 0.1, 1e-16);
  EXPECT_FALSE(clamped);
}

TEST(CorrectExact, AnnihilatesSecondHarmonic) {
  const auto u = capsule_output(0.1);
  const auto c = correct_exact(u, exact_cfg()).signal;
  const double h1 = oracle::magnitude(c.samples(), 1365);
  const double h2 = oracle::magnitude(c.samples(), 2730);
  EXPECT_NEAR(h1, kK0 * 0.1, 1e-10);
  EXPECT_LT(20.0 * std::log10(h2 / h1), -120.0);
}

TEST(CorrectExact, ClampsNegativeRadicand) {
  const auto r = correct_exact(volts({0.0, kK0 / 4.0, kK0, 1.0}), exact_cfg());
  EXPECT_EQ(r.stats.domain_clamps, 1u);
  EXPECT_DOUBLE_EQ(r.signal[1], kK0 / 2.0);
  EXPECT_DOUBLE_EQ(r.signal[2], 2.0 * kK0);
}

TEST(CorrectExact, ErrorOutNamesFirstOffendingSample) {
  std::vector<double> u(10, 0.0);
  u[4] = kK0;
  u[8] = kK0;
  try {
    correct_exact(volts(u), exact_cfg(kK0, ClampPolicy::kErrorOut));
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_EQ(e.sample_index(), std::optional<std::size_t>(4));
  }
}

TEST(CorrectApprox, ZeroIsFixedPoint) {
  const auto r = correct_approx(volts(std::vector<double>(8, 0.0)), approx_cfg());
  for (double v : r.signal.samples()) EXPECT_EQ(v, 0.0);
}

TEST(CorrectApprox, SingleSampleValue) {
  const double u = 0.098870056;
  const double c = correct_sample_approx(u, kK0);
  const long double direct = u + static_cast<long double>(u) * u / kK0;
  EXPECT_NEAR(c, static_cast<double>(direct), 1e-17);
  EXPECT_NEAR(c, 0.0999746, 1e-7);
  EXPECT_NEAR(0.1 - c, 2.5e-5, 1e-6);
}

TEST(CorrectApprox, RejectsNonPositiveK0) {
  for (double k0 : {0.0, -1.0, std::nan("")}) {
    try {
      correct_approx(volts({1.0}), approx_cfg(k0));
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.category(), ErrorCategory::kInvalidParameter);
    }
  }
}

TEST(CorrectApprox, MethodMismatchRejected) {
  EXPECT_THROW(correct_approx(volts({1.0}), exact_cfg()), Error);
  EXPECT_THROW(correct_exact(volts({1.0}), approx_cfg()), Error);
}

TEST(CorrectApprox, RejectsNonVoltInput) {
  try {
    correct(SampledSignal({0.1}, kFs, Unit::kPascals), approx_cfg());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::kUnit);
  }
}

TEST(CorrectApprox, ResidualHarmonicsMatchClosedForm) {
  const double ym = 0.1;
  const auto u = capsule_output(ym);
  const auto c = correct_approx(u, approx_cfg()).signal;
  const double h1 = oracle::magnitude(c.samples(), 1365);
  const double h2 = oracle::magnitude(c.samples(), 2730);
  const double h3 = oracle::magnitude(c.samples(), 4095);
  const double h2_before = oracle::magnitude(u.samples(), 2730);
  EXPECT_NEAR(h1, oracle::approx_residual_h1(kK0, ym), 1e-12);
  EXPECT_NEAR(h2, oracle::approx_residual_h2(kK0, ym), 1e-12);
  EXPECT_NEAR(h3, oracle::approx_residual_h3(kK0, ym), 1e-12);
  EXPECT_NEAR(20.0 * std::log10(h2_before / h2), 40.0, 2.0);
}

TEST(CorrectStream, EmptyChunk) {
  const auto out = correct_stream(volts({}), approx_cfg());
  EXPECT_TRUE(out.empty());
}

TEST(CorrectStream, SingleSampleChunksMatchWholeSignal) {
  const auto u = capsule_output(0.08);
  std::vector<double> v(u.samples().begin(), u.samples().begin() + 48000);
  const auto whole_signal = volts(v);
  for (const auto& cfg : {exact_cfg(), approx_cfg()}) {
    const auto whole = correct(whole_signal, cfg).signal;
    CorrectionStats stats;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto out = correct_stream(volts({v[i]}), cfg, stats);
      ASSERT_EQ(out[0], whole[i]) << "sample " << i;
    }
    EXPECT_EQ(stats.samples_processed, v.size());
  }
}

TEST(CorrectApprox, ConvergesToIdentityForLargeK0) {
  const auto u = capsule_output(0.05);
  double previous = 1e9;
  for (double k0 : {1e2, 1e4, 1e6, 1e8}) {
    const auto c = correct_approx(u, approx_cfg(k0)).signal;
    double err = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      err = std::max(err, std::abs(c[i] - u[i]));
    }
    EXPECT_LT(err, previous);
    previous = err;
  }
  EXPECT_LT(previous, 1e-8);
}

TEST(CorrectApprox, MonotoneRobustnessForOverestimatedK0) {
  const double ym = 0.05;
  const auto u = capsule_output(ym);
  const double thd0 = oracle::magnitude(u.samples(), 2730) /
                      oracle::magnitude(u.samples(), 1365);
  for (double ratio : {1.0, 1.25, 1.5, 2.0, 3.0, 4.0}) {
    const auto c = correct_approx(u, approx_cfg(ratio * kK0)).signal;
    double sq = 0.0;
    for (int k = 2; k <= 10; ++k) {
      sq += std::pow(oracle::magnitude(c.samples(), 1365 * k), 2);
    }
    const double thd = std::sqrt(sq) / oracle::magnitude(c.samples(), 1365);
    EXPECT_LE(thd, thd0) << "ratio " << ratio;
    if (ratio == 2.0) EXPECT_LE(thd, thd0 / 2.0 * 1.01);
  }
}

TEST(CorrectApprox, ParityOfEvenAndOddSignals) {
  // An even signal stays even; an odd signal gains only an even square term.
  std::vector<double> even(65), odd(65);
  for (int i = 0; i < 65; ++i) {
    const double t = (i - 32) / 32.0;
    even[static_cast<std::size_t>(i)] = std::cos(3.0 * t);
    odd[static_cast<std::size_t>(i)] = std::sin(3.0 * t);
  }
  const auto ce = correct_approx(volts(even), approx_cfg()).signal;
  const auto co = correct_approx(volts(odd), approx_cfg()).signal;
  for (std::size_t i = 0; i < 65; ++i) {
    EXPECT_EQ(ce[i], ce[64 - i]);
    const double square = co[i] + co[64 - i];
    EXPECT_NEAR(square, 2.0 * odd[i] * odd[i] / kK0, 1e-15);
  }
}

TEST(Properties, ExactInverseRoundTrip) {
  for (std::uint64_t c = 0; c < 200; ++c) {
    auto g = oracle::rng(c);
    const double k0 = oracle::uniform(g, 0.5, 50.0);
    const double u_lin = oracle::uniform(g, -0.499, 0.499) * k0;
    bool clamped = false;
    const double back = correct_sample_exact(oracle::forward(u_lin, k0), k0, clamped);
    EXPECT_FALSE(clamped);
    EXPECT_LE(std::abs(back - u_lin), 1e-12 * std::abs(u_lin)) << "case " << c;
  }
}

TEST(Properties, TaylorConsistency) {
  // exact - approx = 2u^3/K0^2 + O(u^4); C = 3 bounds it with margin.
  for (std::uint64_t c = 0; c < 200; ++c) {
    auto g = oracle::rng(1000 + c);
    const double k0 = oracle::uniform(g, 1.0, 20.0);
    const double u = oracle::uniform(g, -0.05, 0.05) * k0;
    bool clamped = false;
    const double diff =
        std::abs(correct_sample_exact(u, k0, clamped) - correct_sample_approx(u, k0));
    EXPECT_LE(diff, 3.0 * std::pow(std::abs(u), 3) / (k0 * k0) + 1e-16);
  }
}

TEST(Properties, ChunkingEqualityIsBitwise) {
  for (std::uint64_t c = 0; c < 120; ++c) {
    auto g = oracle::rng(5000 + c);
    const std::size_t n = 1 + g() % 2000;
    std::vector<double> v(n);
    for (double& x : v) x = oracle::uniform(g, -3.0, 3.0);
    const auto cfg = (c % 2 == 0) ? exact_cfg() : approx_cfg();
    const auto whole = correct(volts(v), cfg);

    std::vector<SampledSignal> pieces;
    CorrectionStats stats;
    std::size_t pos = 0;
    while (pos < n) {
      const std::size_t len = std::min<std::size_t>(n - pos, g() % 300);
      pieces.push_back(correct_stream(
          volts(std::vector<double>(v.begin() + static_cast<long>(pos),
                                    v.begin() + static_cast<long>(pos + len))),
          cfg, stats));
      pos += len;
    }
    EXPECT_EQ(concatenate(pieces), whole.signal) << "case " << c;
    EXPECT_EQ(stats, whole.stats);
  }
}

}  // namespace
}  // namespace micdist
