#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "micdist/corrector.hpp"
#include "micdist/estimator.hpp"
#include "micdist/model.hpp"
#include "micdist/spectral.hpp"
#include "micdist/svg.hpp"

namespace micdist {

enum class Experiment {
  kHarmonicSweep,
  kK0SweepEstimate,
  kSingleToneCorrection,
  kThdVsLevel,
  kThdVsK0,
  kTwoTone,
  kMultitone,
};

std::string_view experiment_name(Experiment e);
std::optional<Experiment> parse_experiment(std::string_view name);
std::string_view method_name(CorrectionMethod m);
std::optional<CorrectionMethod> parse_method(std::string_view name);

enum class InputSource { kSynthetic, kWav };

struct ExperimentConfig {
  Experiment experiment = Experiment::kThdVsLevel;
  MicParams mic = MicParams::defaults();
  // Empty selects the experiment default (see default_levels). For the
  // two-tone and multitone experiments the level is per tone.
  std::vector<double> levels_db_spl;
  double fundamental_hz = 1000.0;
  CorrectionMethod method = CorrectionMethod::kQuadraticApprox;
  std::optional<double> k0_override;  // K0 handed to the corrector
  InputSource input = InputSource::kSynthetic;
  std::filesystem::path wav_path;
  int wav_channel = 0;
  std::optional<double> wav_volts_full_scale;
  std::filesystem::path output_dir = ".";
  std::uint64_t seed = 1;

  double sample_rate = kDefaultSampleRate;
  std::size_t frame_length = kDefaultFrameLength;
  int order = 2;
  std::optional<double> clip_above_db_spl;  // hard clip at that level's peak
  std::optional<double> snr_db;              // re the 94 dB SPL output
  bool dc_block = false;
  bool remove_corrected_mean = false;
  double gate_margin_db = kDefaultGateMarginDb;
  int k0_grid_points = 41;  // log-spaced over [0.25, 4] x K0
  int tone_count = 8;       // multitone only
  bool write_svg = false;
};

// 80..126 dB SPL in 2 dB steps for sweeps; 124 dB (y_m ~ 0.1) for the
// single-tone correction; 110 dB for the K0 robustness curve; 120 dB per
// tone for two-tone and multitone.
std::vector<double> default_levels(Experiment e);
std::vector<double> effective_levels(const ExperimentConfig& cfg);

// Deterministic key=value rendering of every result-affecting field
// (output_dir excluded) and its 64-bit FNV-1a hash in hex.
std::string canonical_config(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

struct ReportColumn {
  std::string name;
  std::string unit;
};

struct ReportRow {
  std::string label;
  std::vector<double> values;  // one per column
};

struct ExperimentReport {
  Experiment experiment = Experiment::kThdVsLevel;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<ReportColumn> columns;
  std::vector<ReportRow> rows;

  // Index of a column by name; throws invalid-parameter if absent.
  std::size_t column(std::string_view name) const;
  double value(std::size_t row, std::string_view name) const {
    return rows.at(row).values.at(column(name));
  }
  std::optional<std::string> meta(std::string_view key) const;
};

// Sweep experiments start every row with these columns.
std::vector<ReportColumn> core_columns();

struct ImdProductResult {
  ImdProduct before;
  ImdProduct after;
  double reduction_db = 0.0;
};

struct ImdOutcome {
  ImdReport before;
  ImdReport after;
  std::vector<ImdProductResult> products;  // order-2 products
  double mean_intermod_reduction_db = 0.0;  // over f_i +- f_j, i != j
  double min_intermod_reduction_db = 0.0;
  double crest_factor = 0.0;
};

struct NamedSpectrum {
  std::string name;  // written as spectrum_<name>.csv
  Spectrum spectrum;
};

struct NamedChart {
  std::string name;  // written as <name>.svg
  LineChart chart;
};

struct ExperimentOutput {
  ExperimentReport report;
  std::vector<NamedSpectrum> spectra;
  std::optional<K0Estimate> k0_estimate;
  std::optional<ImdOutcome> imd;
  std::vector<NamedChart> charts;
};

ExperimentOutput run_harmonic_sweep(const ExperimentConfig& cfg);
ExperimentOutput run_k0_sweep_estimate(const ExperimentConfig& cfg);
ExperimentOutput run_single_tone_correction(const ExperimentConfig& cfg);
ExperimentOutput run_thd_vs_level(const ExperimentConfig& cfg);
ExperimentOutput run_thd_vs_k0(const ExperimentConfig& cfg);
// Two-tone or multitone according to cfg.experiment.
ExperimentOutput run_imd(const ExperimentConfig& cfg);

ExperimentOutput run_experiment(const ExperimentConfig& cfg);

// Microphone output for a single sine at `level_db_spl` under the config's
// model settings. `level_index` decorrelates the noise between levels.
SampledSignal simulate_tone(const ExperimentConfig& cfg, const ToneGrid& grid,
                            std::size_t level_index);

// Reads the configured WAV as calibrated microphone output. The first
// frame_length samples form the analysis frame (the whole file if shorter).
SampledSignal ingest_wav(const ExperimentConfig& cfg);

void write_report_csv(std::ostream& out, const ExperimentReport& report);

// Writes report.csv, spectrum_*.csv, k0_estimate.csv, *.svg (when enabled)
// and report_meta.json into cfg.output_dir. Returns the written paths.
std::vector<std::filesystem::path> write_outputs(const ExperimentOutput& output,
                                                 const ExperimentConfig& cfg);

}  // namespace micdist
