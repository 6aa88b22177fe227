#include "micdist/pipeline.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "micdist/csv.hpp"
#include "micdist/error.hpp"
#include "micdist/wav.hpp"
#include "oracles.hpp"

namespace micdist {
namespace {

namespace fs = std::filesystem;

ExperimentConfig config(Experiment e) {
  ExperimentConfig cfg;
  cfg.experiment = e;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("micdist_pipeline_" + name);
  fs::remove_all(dir);
  return dir;
}

TEST(Names, RoundTrip) {
  for (Experiment e :
       {Experiment::kHarmonicSweep, Experiment::kK0SweepEstimate,
        Experiment::kSingleToneCorrection, Experiment::kThdVsLevel,
        Experiment::kThdVsK0, Experiment::kTwoTone, Experiment::kMultitone}) {
    EXPECT_EQ(parse_experiment(experiment_name(e)), e);
  }
  EXPECT_FALSE(parse_experiment("nope"));
  EXPECT_EQ(parse_method("exact_sqrt"), CorrectionMethod::kExactSqrt);
  EXPECT_FALSE(parse_method("cubic"));
}

TEST(ConfigHash, IgnoresOutputDirButNotSeed) {
  auto a = config(Experiment::kThdVsLevel);
  auto b = a;
  b.output_dir = "/somewhere/else";
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.seed = 2;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(HarmonicSweep, RowsMatchClosedForms) {
  const auto out = run_harmonic_sweep(config(Experiment::kHarmonicSweep));
  const auto& r = out.report;
  ASSERT_EQ(r.rows.size(), 24u);
  const double k0 = MicParams::defaults().k0();
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const double level = r.value(i, "level_db_spl");
    EXPECT_DOUBLE_EQ(level, 80.0 + 2.0 * static_cast<double>(i));
    // Linear sensitivity S makes H1 equal the excitation level.
    EXPECT_NEAR(r.value(i, "h1_db"), level, 1e-9);
    EXPECT_NEAR(r.value(i, "h2_db"), r.value(i, "model_h2_db"), 1e-9);
    const double ym = r.value(i, "ym");
    EXPECT_NEAR(r.value(i, "thd_orig"), oracle::order2_thd(ym), 1e-9 * ym);
    EXPECT_NEAR(r.value(i, "thd_corrected"), oracle::approx_residual_thd(k0, ym),
                1e-6 * oracle::approx_residual_thd(k0, ym));
    EXPECT_NEAR(r.value(i, "reduction_db"),
                amplitude_db(r.value(i, "thd_orig") / r.value(i, "thd_corrected")),
                1e-9);
    EXPECT_TRUE(std::isfinite(r.value(i, "reduction_db")));
  }
}

TEST(HarmonicSweep, SecondHarmonicSlopeIsTwo) {
  const auto out = run_harmonic_sweep(config(Experiment::kHarmonicSweep));
  std::vector<double> x, y;
  for (std::size_t i = 0; i < out.report.rows.size(); ++i) {
    if (out.report.value(i, "level_db_spl") > 120.0) continue;
    x.push_back(out.report.value(i, "level_db_spl"));
    y.push_back(out.report.value(i, "h2_db"));
  }
  EXPECT_NEAR(oracle::slope(x, y), 2.0, 0.01);
}

TEST(HarmonicSweep, ClippingDepartsFromModel) {
  auto cfg = config(Experiment::kHarmonicSweep);
  cfg.clip_above_db_spl = 120.0;
  const auto out = run_harmonic_sweep(cfg);
  for (std::size_t i = 0; i < out.report.rows.size(); ++i) {
    const double level = out.report.value(i, "level_db_spl");
    if (level <= 120.0) {
      EXPECT_NEAR(out.report.value(i, "h2_db"), out.report.value(i, "model_h2_db"),
                  1e-6);
      EXPECT_LT(out.report.value(i, "h3_db"), 0.0) << level;
    } else {
      // The pure quadratic model has no third harmonic; clipping creates one.
      EXPECT_GT(out.report.value(i, "h3_db"), 60.0) << level;
    }
  }
}

TEST(HarmonicSweep, DivergentLevelNamed) {
  auto cfg = config(Experiment::kHarmonicSweep);
  cfg.levels_db_spl = {100.0, 150.0};
  try {
    run_experiment(cfg);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("150"), std::string::npos);
  }
}

TEST(HarmonicSweep, RejectsDescendingLevelsAndWav) {
  auto cfg = config(Experiment::kHarmonicSweep);
  cfg.levels_db_spl = {100.0, 90.0};
  EXPECT_THROW(run_experiment(cfg), Error);
  cfg.levels_db_spl = {};
  cfg.input = InputSource::kWav;
  EXPECT_THROW(run_experiment(cfg), Error);
}

TEST(SingleTone, BothMethodsReported) {
  const auto out = run_single_tone_correction(config(Experiment::kSingleToneCorrection));
  const auto& r = out.report;
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_EQ(r.rows[1].label, "exact_sqrt");
  EXPECT_EQ(r.rows[2].label, "quadratic_approx");
  EXPECT_GE(r.value(1, "h2_reduction_db"), 120.0);
  EXPECT_NEAR(r.value(2, "h2_reduction_db"), 40.0, 2.0);
  EXPECT_GT(r.value(2, "h3_change_db"), 0.0);
  ASSERT_EQ(out.spectra.size(), 3u);
  EXPECT_EQ(out.spectra[0].name, "original");
}

TEST(SingleTone, WavInputNeedsCalibrationAndEstimatesK0) {
  const auto dir = scratch("wav");
  fs::create_directories(dir);
  const auto synthetic = config(Experiment::kSingleToneCorrection);
  const MicParams mic = synthetic.mic;
  const auto grid = single_tone_grid(1000.0, spl_to_pressure_peak(110.0));
  const auto u = simulate_tone(synthetic, grid, 0);
  write_wav(dir / "rec.wav", u, WavEncoding::kFloat64, 1.0);

  auto cfg = synthetic;
  cfg.input = InputSource::kWav;
  cfg.wav_path = dir / "rec.wav";
  try {
    run_experiment(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::kInvalidParameter);
  }
  cfg.wav_volts_full_scale = 1.0;
  const auto out = run_experiment(cfg);
  EXPECT_NEAR(out.report.value(0, "k0_used"), mic.k0(), 1e-6 * mic.k0());
  EXPECT_NEAR(out.report.value(0, "level_db_spl"), 110.0, 1e-6);
  EXPECT_GE(out.report.value(1, "h2_reduction_db"), 100.0);
  fs::remove_all(dir);
}

TEST(ThdVsLevel, ReductionFactors) {
  auto cfg = config(Experiment::kThdVsLevel);
  cfg.levels_db_spl = {110.0, 120.0};
  const auto out = run_thd_vs_level(cfg);
  EXPECT_NEAR(out.report.value(0, "reduction_factor"), 50.0, 1.0);
  EXPECT_GE(out.report.value(1, "reduction_factor"), 10.0);
  EXPECT_LE(out.report.value(1, "reduction_factor"), 16.0);
}

TEST(ThdVsLevel, CorrectedNeverExceedsOriginal) {
  const auto out = run_thd_vs_level(config(Experiment::kThdVsLevel));
  for (std::size_t i = 0; i < out.report.rows.size(); ++i) {
    EXPECT_LE(out.report.value(i, "thd_corrected"), out.report.value(i, "thd_orig"));
  }
}

TEST(ThdVsK0, MinimumAtTrueK0) {
  const auto out = run_thd_vs_k0(config(Experiment::kThdVsK0));
  const auto& r = out.report;
  ASSERT_EQ(r.rows.size(), 41u);
  std::size_t best = 0;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    if (r.value(i, "thd_approx") < r.value(best, "thd_approx")) best = i;
  }
  EXPECT_NEAR(r.value(best, "k0_ratio"), 1.0, 1e-12);
  EXPECT_EQ(r.value(best, "nearest_estimate"), 1.0);
  EXPECT_NEAR(std::stod(*r.meta("k0_estimate")), MicParams::defaults().k0(), 1e-6);
}

TEST(Imd, TwoToneProductsReduced) {
  const auto out = run_imd(config(Experiment::kTwoTone));
  ASSERT_TRUE(out.imd);
  EXPECT_EQ(out.imd->products.size(), 4u);
  EXPECT_GT(out.imd->min_intermod_reduction_db, 25.0);
  EXPECT_EQ(out.report.rows.size(), 4u);
}

TEST(Imd, LinearModelHasNoProductsBeforeCorrection) {
  auto cfg = config(Experiment::kTwoTone);
  cfg.order = 1;
  const auto out = run_imd(cfg);
  const double k0 = cfg.mic.k0();
  const double v = k0 * displacement_amplitude(cfg.mic, 120.0);  // per tone
  for (const auto& p : out.imd->products) {
    EXPECT_LT(std::abs(p.before.amplitude), 1e-12);
    // The corrector's own u^2 / K0 term is all that remains.
    const double expected = p.before.is_harmonic() ? v * v / (2.0 * k0) : v * v / k0;
    EXPECT_NEAR(std::abs(p.after.amplitude), expected, 1e-9 * expected);
  }
}

TEST(Imd, MultitoneNeedsEightTones) {
  auto cfg = config(Experiment::kMultitone);
  cfg.tone_count = 4;
  EXPECT_THROW(run_experiment(cfg), Error);
}

TEST(Outputs, FilesAndDeterminism) {
  for (Experiment e : {Experiment::kK0SweepEstimate, Experiment::kSingleToneCorrection,
                       Experiment::kTwoTone}) {
    auto cfg = config(e);
    cfg.snr_db = 60.0;
    cfg.write_svg = true;
    const auto dir_a = scratch("a"), dir_b = scratch("b");
    cfg.output_dir = dir_a;
    const auto files_a = write_outputs(run_experiment(cfg), cfg);
    cfg.output_dir = dir_b;
    const auto files_b = write_outputs(run_experiment(cfg), cfg);
    ASSERT_EQ(files_a.size(), files_b.size());
    EXPECT_TRUE(fs::exists(dir_a / "report.csv"));
    EXPECT_TRUE(fs::exists(dir_a / "report_meta.json"));
    bool any_svg = false;
    for (std::size_t i = 0; i < files_a.size(); ++i) {
      const auto name = files_a[i].filename().string();
      any_svg |= files_a[i].extension() == ".svg";
      if (files_a[i].extension() == ".csv") {
        EXPECT_EQ(slurp(files_a[i]), slurp(files_b[i])) << name;
      }
    }
    EXPECT_TRUE(any_svg);
    if (e == Experiment::kK0SweepEstimate) {
      EXPECT_TRUE(fs::exists(dir_a / "k0_estimate.csv"));
    }
    const auto report = slurp(dir_a / "report.csv");
    EXPECT_NE(report.find("# config_hash: " + config_hash(cfg)), std::string::npos);
    EXPECT_NE(report.find("# units:"), std::string::npos);
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
  }
}

}  // namespace
}  // namespace micdist
