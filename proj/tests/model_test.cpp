#include "micdist/model.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "micdist/error.hpp"
#include "micdist/spectral.hpp"
#include "oracles.hpp"

namespace micdist {
namespace {

constexpr double kFs = 48000.0;
constexpr std::size_t kN = 1u << 16;

SampledSignal displacement(double ym, int bin = 1365, double phase = 0.0) {
  return SampledSignal(oracle::sine(kN, bin, ym, phase), kFs,
                       Unit::kDimensionless);
}

TEST(K0FromPhysical, ZeroParasiticGivesPolarizationVoltage) {
  EXPECT_DOUBLE_EQ(k0_from_physical(10.0, 1e-12, 0.0), 10.0);
}

TEST(K0FromPhysical, EqualCapacitancesHalveVoltage) {
  EXPECT_DOUBLE_EQ(k0_from_physical(10.0, 1e-12, 1e-12), 5.0);
}

TEST(K0FromPhysical, DefaultsGiveEstimatedCoefficient) {
  EXPECT_NEAR(MicParams::defaults().k0(), 8.85, 1e-12);
  EXPECT_NEAR(k0_from_physical(MicParams::defaults()), 8.85, 1e-12);
}

TEST(K0FromPhysical, RejectsNonPositiveParameters) {
  for (auto bad : {0.0, -1.0}) {
    try {
      k0_from_physical(bad, 1e-12, 0.0);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.category(), ErrorCategory::kInvalidParameter);
    }
    EXPECT_THROW(k0_from_physical(10.0, bad, 0.0), Error);
    EXPECT_THROW(MicParams(10.0, 1e-12, 0.0, bad, 0.02), Error);
  }
  EXPECT_THROW(k0_from_physical(10.0, 1e-12, -1e-12), Error);
}

TEST(PressureMapping, ZeroPressureGivesZeroDisplacement) {
  const auto y = pressure_to_displacement_ratio(
      SampledSignal::zeros(64, kFs, Unit::kPascals), MicParams::defaults());
  EXPECT_EQ(y.unit(), Unit::kDimensionless);
  for (double v : y.samples()) EXPECT_EQ(v, 0.0);
}

TEST(PressureMapping, SineAt110DbGivesTwoPercentDisplacement) {
  const double p_peak = spl_to_pressure_peak(110.0);
  EXPECT_NEAR(p_peak, 8.94, 0.01);
  const auto y = pressure_to_displacement_ratio(
      SampledSignal(oracle::sine(kN, 1365, p_peak), kFs, Unit::kPascals),
      MicParams::defaults());
  EXPECT_NEAR(y.peak(), 0.02, 2e-4);
  EXPECT_NEAR(displacement_amplitude(MicParams::defaults(), 110.0), 0.020011,
              1e-6);
}

TEST(PressureMapping, DoublingSensitivityDoublesDisplacement) {
  const SampledSignal p(oracle::sine(4096, 17, 3.0), kFs, Unit::kPascals);
  const auto mic = MicParams::defaults();
  const auto a = pressure_to_displacement_ratio(p, mic);
  const auto b = pressure_to_displacement_ratio(
      p, mic.with_sensitivity(2.0 * mic.linear_sensitivity()));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(2.0 * a[i], b[i]);
}

TEST(PressureMapping, RejectsWrongUnit) {
  try {
    pressure_to_displacement_ratio(SampledSignal::zeros(4, kFs, Unit::kVolts),
                                   MicParams::defaults());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::kUnit);
  }
}

TEST(Simulate, QuadraticModelSampleForSample) {
  const auto mic = MicParams::defaults();
  const auto y = displacement(0.1);
  const auto u = simulate(y, mic, {});
  ASSERT_EQ(u.unit(), Unit::kVolts);
  for (std::size_t i = 0; i < u.size(); i += 97) {
    EXPECT_NEAR(u[i], mic.k0() * (y[i] - y[i] * y[i]), 1e-15);
  }
}

TEST(Simulate, FourierAmplitudesMatchClosedForm) {
  const auto mic = MicParams::defaults();
  const double k0 = mic.k0(), ym = 0.01;
  const auto u = simulate(displacement(ym), mic, {});
  const double v1 = oracle::magnitude(u.samples(), 1365);
  const double v2 = oracle::magnitude(u.samples(), 2730);
  EXPECT_NEAR(v1, 0.0885, 0.0885 * 1e-9);
  EXPECT_NEAR(v2, 4.425e-4, 4.425e-4 * 1e-9);
  EXPECT_NEAR(oracle::dft_bin(u.samples(), 0).real(), oracle::order2_dc(k0, ym),
              1e-12);
}

TEST(Simulate, ZeroInputGivesZeroOutput) {
  const auto u = simulate(SampledSignal::zeros(128, kFs, Unit::kDimensionless),
                          MicParams::defaults(), {});
  for (double v : u.samples()) EXPECT_EQ(v, 0.0);
}

TEST(Simulate, DivergentDisplacementIsADomainError) {
  std::vector<double> y(16, 0.0);
  y[7] = -1.0;
  try {
    simulate(SampledSignal(y, kFs, Unit::kDimensionless), MicParams::defaults(),
             {});
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_EQ(e.category(), ErrorCategory::kDomain);
    ASSERT_TRUE(e.sample_index());
    EXPECT_EQ(*e.sample_index(), 7u);
  }
}

TEST(Simulate, OrderBelowOneRejected) {
  NonlinearityConfig cfg;
  cfg.order = 0;
  EXPECT_THROW(simulate(displacement(0.01), MicParams::defaults(), cfg), Error);
}

TEST(Simulate, NegatingDisplacementFlipsOnlyOddHarmonics) {
  const auto mic = MicParams::defaults();
  const auto a = simulate(displacement(0.05), mic, {});
  const auto b = simulate(displacement(-0.05), mic, {});
  const auto a1 = oracle::dft_bin(a.samples(), 1365);
  const auto b1 = oracle::dft_bin(b.samples(), 1365);
  const auto a2 = oracle::dft_bin(a.samples(), 2730);
  const auto b2 = oracle::dft_bin(b.samples(), 2730);
  EXPECT_NEAR(std::abs(a1 + b1), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(a2 - b2), 0.0, 1e-12);
}

TEST(Simulate, OrderOneIsLinear) {
  NonlinearityConfig cfg;
  cfg.order = 1;
  const auto mic = MicParams::defaults();
  const auto ya = displacement(0.2, 100), yb = displacement(0.3, 333, 1.0);
  std::vector<double> sum(kN);
  for (std::size_t i = 0; i < kN; ++i) sum[i] = ya[i] + yb[i];
  const auto ua = simulate(ya, mic, cfg), ub = simulate(yb, mic, cfg);
  const auto us = simulate(SampledSignal(sum, kFs, Unit::kDimensionless), mic, cfg);
  for (std::size_t i = 0; i < kN; i += 13) {
    EXPECT_NEAR(us[i], ua[i] + ub[i], 1e-14);
  }
}

TEST(Simulate, HigherOrdersFollowAlternatingSeries) {
  const double k0 = 8.85, y = 0.3;
  EXPECT_NEAR(capsule_response(y, k0, 1), k0 * y, 1e-15);
  EXPECT_NEAR(capsule_response(y, k0, 3), k0 * (y - y * y + y * y * y), 1e-15);
  EXPECT_NEAR(capsule_response(y, k0, 200), k0 * y / (1.0 + y), 1e-12);
}

TEST(Simulate, SeededNoiseIsReproducible) {
  NonlinearityConfig cfg;
  cfg.noise_rms = 1e-3;
  cfg.seed = 42;
  const auto mic = MicParams::defaults();
  const auto a = simulate(displacement(0.01), mic, cfg);
  const auto b = simulate(displacement(0.01), mic, cfg);
  EXPECT_EQ(a, b);
  cfg.seed = 43;
  EXPECT_NE(a, simulate(displacement(0.01), mic, cfg));
}

TEST(Simulate, DcBlockRemovesMean) {
  NonlinearityConfig cfg;
  cfg.dc_block = true;
  const auto u = simulate(displacement(0.1), MicParams::defaults(), cfg);
  EXPECT_NEAR(u.mean(), 0.0, 1e-15);
}

TEST(Simulate, ClipLimitsPeak) {
  NonlinearityConfig cfg;
  cfg.clip_level = 0.5;
  const auto u = simulate(displacement(0.1), MicParams::defaults(), cfg);
  EXPECT_LE(u.peak(), 0.5);
  EXPECT_DOUBLE_EQ(u.peak(), 0.5);
}

TEST(LevelConversions, RoundTrip) {
  const auto mic = MicParams::defaults();
  for (double l : {80.0, 94.0, 110.0, 126.0}) {
    EXPECT_NEAR(pressure_rms_to_spl(spl_to_pressure_rms(l)), l, 1e-12);
    EXPECT_NEAR(level_for_displacement(mic, displacement_amplitude(mic, l)), l,
                1e-12);
  }
  EXPECT_NEAR(spl_to_pressure_rms(94.0), 1.0, 0.003);
  // A linear output of K0 y_m maps back to the excitation level.
  EXPECT_NEAR(output_amplitude_to_spl(mic, mic.k0() * displacement_amplitude(mic, 100.0)),
              100.0, 1e-12);
}

}  // namespace
}  // namespace micdist
