#include "micdist/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <limits>
#include <ostream>
#include <sstream>

#include "micdist/csv.hpp"
#include "micdist/error.hpp"
#include "micdist/wav.hpp"
#include "parallel.hpp"

namespace micdist {

namespace {

constexpr double kSnrReferencePressurePa = 1.0;  // 94 dB SPL
constexpr double kAmplitudeFloor = 1e-30;
constexpr double kGridLowRatio = 0.25;
constexpr double kGridHighRatio = 4.0;
constexpr std::array<double, 2> kTwoToneTargetsHz = {1000.0, 1370.0};
constexpr double kMultitoneLowHz = 200.0;
constexpr double kMultitoneHighHz = 5000.0;
constexpr int kMinMultitoneCount = 8;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

bool is_sweep(Experiment e) {
  return e == Experiment::kHarmonicSweep || e == Experiment::kK0SweepEstimate ||
         e == Experiment::kThdVsLevel;
}

void require_synthetic(const ExperimentConfig& cfg) {
  if (cfg.input != InputSource::kSynthetic) {
    throw Error(ErrorCategory::kInvalidParameter,
                std::string(experiment_name(cfg.experiment)) +
                    " runs on synthetic input only");
  }
}

double spl_of(const MicParams& mic, double volts_peak) {
  return output_amplitude_to_spl(mic, std::max(volts_peak, kAmplitudeFloor));
}

double reduction_db(double before, double after) {
  return amplitude_db(before) - amplitude_db(after);
}

NonlinearityConfig model_config(const ExperimentConfig& cfg,
                                std::size_t index) {
  NonlinearityConfig nl;
  nl.order = cfg.order;
  nl.dc_block = cfg.dc_block;
  nl.seed = mix_seed(cfg.seed, index);
  if (cfg.clip_above_db_spl) {
    nl.clip_level = peak_output_at_level(cfg.mic, cfg.order,
                                         *cfg.clip_above_db_spl);
  }
  if (cfg.snr_db) {
    nl.noise_rms = cfg.mic.linear_sensitivity() * kSnrReferencePressurePa *
                   std::pow(10.0, -*cfg.snr_db / 20.0);
  }
  return nl;
}

ToneGrid tone_at_level(const ExperimentConfig& cfg, double level_db_spl) {
  return single_tone_grid(cfg.fundamental_hz,
                          spl_to_pressure_peak(level_db_spl), cfg.sample_rate,
                          cfg.frame_length);
}

SampledSignal simulate_at_level(const ExperimentConfig& cfg,
                                const ToneGrid& grid, double level_db_spl,
                                std::size_t index) {
  try {
    return simulate_tone(cfg, grid, index);
  } catch (const DomainError& e) {
    throw DomainError("level " + format_number(level_db_spl) +
                          " dB SPL drives the capsule out of the series "
                          "convergence region (" + e.what() + ")",
                      e.sample_index());
  }
}

int harmonic_count(int fundamental_bin, std::size_t frame_length) {
  const int n = default_harmonic_count(fundamental_bin, frame_length);
  if (n < 2) {
    throw Error(ErrorCategory::kInvalidParameter,
                "second harmonic of the fundamental is above Nyquist");
  }
  return n;
}

SampledSignal apply_correction(const ExperimentConfig& cfg,
                               const SampledSignal& u, double k0,
                               CorrectionMethod method,
                               CorrectionStats* stats = nullptr) {
  CorrectionConfig cc{k0, method, ClampPolicy::kClampToVertex};
  auto result = correct(u, cc);
  if (stats) *stats = result.stats;
  return cfg.remove_corrected_mean ? remove_mean(result.signal)
                                   : std::move(result.signal);
}

std::vector<double> core_values(const ExperimentConfig& cfg, double level,
                                const HarmonicReport& h, double thd_orig,
                                double thd_corrected, double k0_used) {
  return {level,
          spl_of(cfg.mic, h.magnitude(1)),
          spl_of(cfg.mic, h.magnitude(2)),
          h.n_harmonics >= 3 ? spl_of(cfg.mic, h.magnitude(3))
                             : spl_of(cfg.mic, 0.0),
          thd_orig,
          thd_corrected,
          k0_used,
          reduction_db(thd_orig, thd_corrected)};
}

ExperimentReport new_report(const ExperimentConfig& cfg) {
  ExperimentReport r;
  r.experiment = cfg.experiment;
  r.config_hash = config_hash(cfg);
  r.seed = cfg.seed;
  r.columns = core_columns();
  return r;
}

struct LevelRun {
  double level = 0.0;
  double ym = 0.0;
  SampledSignal u;
  HarmonicReport original;
};

std::vector<LevelRun> simulate_sweep(const ExperimentConfig& cfg,
                                     const std::vector<double>& levels) {
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (!(levels[i] > levels[i - 1])) {
      throw Error(ErrorCategory::kInvalidParameter,
                  "sweep levels must be strictly ascending");
    }
  }
  return detail::parallel_map(levels.size(), [&](std::size_t i) {
    const ToneGrid grid = tone_at_level(cfg, levels[i]);
    const int fb = grid.tones.front().bin;
    SampledSignal u = simulate_at_level(cfg, grid, levels[i], i);
    HarmonicReport h =
        harmonics(u, grid, harmonic_count(fb, cfg.frame_length));
    return LevelRun{levels[i], displacement_amplitude(cfg.mic, levels[i]),
                    std::move(u), std::move(h)};
  });
}

// THD of the corrected signal for every level.
std::vector<double> corrected_thd(const ExperimentConfig& cfg,
                                  const std::vector<LevelRun>& runs,
                                  double k0) {
  return detail::parallel_map(runs.size(), [&](std::size_t i) {
    const auto& run = runs[i];
    const SampledSignal c = apply_correction(cfg, run.u, k0, cfg.method);
    return thd(harmonics(c, run.original.fundamental_bin,
                         run.original.n_harmonics));
  });
}

ChartSeries series(std::string name, bool markers = false) {
  return ChartSeries{std::move(name), {}, markers};
}

LineChart spectrum_chart(std::string title,
                         const std::vector<NamedSpectrum>& spectra,
                         double max_hz, const MicParams& mic) {
  LineChart chart{std::move(title), "frequency [Hz]",
                  "equivalent input level [dB SPL]", false, {}};
  for (const auto& s : spectra) {
    ChartSeries line = series(s.name);
    const double hz = s.spectrum.bin_hz();
    for (std::size_t k = 1; k < s.spectrum.bins.size(); ++k) {
      const double f = static_cast<double>(k) * hz;
      if (f > max_hz) break;
      line.points.emplace_back(f, spl_of(mic, std::abs(s.spectrum.bins[k])));
    }
    chart.series.push_back(std::move(line));
  }
  return chart;
}

std::string product_label(const ImdProduct& p) {
  std::string s;
  for (std::size_t i = 0; i < p.coefficients.size(); ++i) {
    const int k = p.coefficients[i];
    if (k == 0) continue;
    if (k < 0) s += '-';
    else if (!s.empty()) s += '+';
    if (std::abs(k) != 1) s += std::to_string(std::abs(k));
    s += 'f' + std::to_string(i + 1);
  }
  return s;
}

std::string iso_utc_now() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace

std::string_view experiment_name(Experiment e) {
  switch (e) {
    case Experiment::kHarmonicSweep: return "harmonic_sweep";
    case Experiment::kK0SweepEstimate: return "k0_sweep_estimate";
    case Experiment::kSingleToneCorrection: return "single_tone_correction";
    case Experiment::kThdVsLevel: return "thd_vs_level";
    case Experiment::kThdVsK0: return "thd_vs_k0";
    case Experiment::kTwoTone: return "two_tone";
    case Experiment::kMultitone: return "multitone";
  }
  return "unknown";
}

std::optional<Experiment> parse_experiment(std::string_view name) {
  for (Experiment e :
       {Experiment::kHarmonicSweep, Experiment::kK0SweepEstimate,
        Experiment::kSingleToneCorrection, Experiment::kThdVsLevel,
        Experiment::kThdVsK0, Experiment::kTwoTone, Experiment::kMultitone}) {
    if (experiment_name(e) == name) return e;
  }
  return std::nullopt;
}

std::string_view method_name(CorrectionMethod m) {
  return m == CorrectionMethod::kExactSqrt ? "exact_sqrt" : "quadratic_approx";
}

std::optional<CorrectionMethod> parse_method(std::string_view name) {
  if (name == "exact_sqrt") return CorrectionMethod::kExactSqrt;
  if (name == "quadratic_approx") return CorrectionMethod::kQuadraticApprox;
  return std::nullopt;
}

std::vector<double> default_levels(Experiment e) {
  switch (e) {
    case Experiment::kSingleToneCorrection: return {124.0};
    case Experiment::kThdVsK0: return {110.0};
    case Experiment::kTwoTone:
    case Experiment::kMultitone: return {120.0};
    default: break;
  }
  std::vector<double> levels;
  for (int l = 80; l <= 126; l += 2) levels.push_back(l);
  return levels;
}

std::vector<double> effective_levels(const ExperimentConfig& cfg) {
  return cfg.levels_db_spl.empty() ? default_levels(cfg.experiment)
                                   : cfg.levels_db_spl;
}

std::string canonical_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  auto kv = [&](const char* key, const std::string& value) {
    os << key << '=' << value << '\n';
  };
  auto num = [](double v) { return format_number(v); };
  kv("experiment", std::string(experiment_name(cfg.experiment)));
  kv("polarization_voltage", num(cfg.mic.polarization_voltage()));
  kv("static_capacitance", num(cfg.mic.static_capacitance()));
  kv("parasitic_capacitance", num(cfg.mic.parasitic_capacitance()));
  kv("air_gap", num(cfg.mic.air_gap()));
  kv("linear_sensitivity", num(cfg.mic.linear_sensitivity()));
  std::string levels;
  for (double l : effective_levels(cfg)) {
    if (!levels.empty()) levels += ',';
    levels += num(l);
  }
  kv("levels_db_spl", levels);
  kv("fundamental_hz", num(cfg.fundamental_hz));
  kv("method", std::string(method_name(cfg.method)));
  kv("k0_override", cfg.k0_override ? num(*cfg.k0_override) : "none");
  kv("input", cfg.input == InputSource::kWav ? "wav" : "synthetic");
  if (cfg.input == InputSource::kWav) {
    kv("wav_path", cfg.wav_path.string());
    kv("wav_channel", std::to_string(cfg.wav_channel));
    kv("wav_volts_full_scale",
       cfg.wav_volts_full_scale ? num(*cfg.wav_volts_full_scale) : "none");
  }
  kv("seed", std::to_string(cfg.seed));
  kv("sample_rate", num(cfg.sample_rate));
  kv("frame_length", std::to_string(cfg.frame_length));
  kv("order", std::to_string(cfg.order));
  kv("clip_above_db_spl",
     cfg.clip_above_db_spl ? num(*cfg.clip_above_db_spl) : "none");
  kv("snr_db", cfg.snr_db ? num(*cfg.snr_db) : "none");
  kv("dc_block", cfg.dc_block ? "1" : "0");
  kv("remove_corrected_mean", cfg.remove_corrected_mean ? "1" : "0");
  kv("gate_margin_db", num(cfg.gate_margin_db));
  kv("k0_grid_points", std::to_string(cfg.k0_grid_points));
  kv("tone_count", std::to_string(cfg.tone_count));
  return os.str();
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical_config(cfg)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::size_t ExperimentReport::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  throw Error(ErrorCategory::kInvalidParameter,
              "no report column " + std::string(name));
}

std::optional<std::string> ExperimentReport::meta(std::string_view key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::vector<ReportColumn> core_columns() {
  return {{"level_db_spl", "dB SPL"}, {"h1_db", "dB SPL"},
          {"h2_db", "dB SPL"},        {"h3_db", "dB SPL"},
          {"thd_orig", "ratio"},      {"thd_corrected", "ratio"},
          {"k0_used", "V"},           {"reduction_db", "dB"}};
}

SampledSignal simulate_tone(const ExperimentConfig& cfg, const ToneGrid& grid,
                            std::size_t level_index) {
  const SampledSignal p = synthesize(grid, Unit::kPascals);
  return simulate(pressure_to_displacement_ratio(p, cfg.mic), cfg.mic,
                  model_config(cfg, level_index));
}

SampledSignal ingest_wav(const ExperimentConfig& cfg) {
  if (!cfg.wav_volts_full_scale) {
    throw Error(ErrorCategory::kInvalidParameter,
                "WAV input needs a full-scale-to-volts calibration factor");
  }
  SampledSignal s =
      read_wav(cfg.wav_path, cfg.wav_channel, *cfg.wav_volts_full_scale);
  if (s.size() <= cfg.frame_length) return s;
  std::vector<double> frame(s.samples().begin(),
                            s.samples().begin() +
                                static_cast<long>(cfg.frame_length));
  return SampledSignal(std::move(frame), s.sample_rate(), Unit::kVolts);
}

ExperimentOutput run_harmonic_sweep(const ExperimentConfig& cfg) {
  require_synthetic(cfg);
  const auto runs = simulate_sweep(cfg, effective_levels(cfg));
  const double k0_used = cfg.k0_override.value_or(cfg.mic.k0());
  const auto thd_c = corrected_thd(cfg, runs, k0_used);
  const double k0 = cfg.mic.k0();

  ExperimentOutput out{new_report(cfg), {}, {}, {}, {}};
  auto& rep = out.report;
  for (const char* c : {"model_h1_db", "model_h2_db", "model_h3_db"}) {
    rep.columns.push_back({c, "dB SPL"});
  }
  rep.columns.push_back({"ym", "1"});

  LineChart chart{"Harmonic levels vs excitation", "reference level [dB SPL]",
                  "equivalent input level [dB SPL]", false, {}};
  auto h1 = series("H1", true), h2 = series("H2", true), h3 = series("H3", true);
  auto m1 = series("H1 model"), m2 = series("H2 model"), m3 = series("H3 model");
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    auto values = core_values(cfg, r.level, r.original, thd(r.original),
                              thd_c[i], k0_used);
    // Leading-order closed forms: K0 y_m, K0 y_m^2 / 2, K0 y_m^3 / 4.
    values.push_back(spl_of(cfg.mic, k0 * r.ym));
    values.push_back(spl_of(cfg.mic, k0 * r.ym * r.ym / 2.0));
    values.push_back(spl_of(cfg.mic, k0 * r.ym * r.ym * r.ym / 4.0));
    values.push_back(r.ym);
    h1.points.emplace_back(r.level, values[1]);
    h2.points.emplace_back(r.level, values[2]);
    h3.points.emplace_back(r.level, values[3]);
    m1.points.emplace_back(r.level, values[8]);
    m2.points.emplace_back(r.level, values[9]);
    m3.points.emplace_back(r.level, values[10]);
    rep.rows.push_back({"level", std::move(values)});
  }
  chart.series = {h1, h2, h3, m1, m2, m3};
  out.charts.push_back({"harmonic_sweep", std::move(chart)});
  return out;
}

ExperimentOutput run_thd_vs_level(const ExperimentConfig& cfg) {
  require_synthetic(cfg);
  const auto runs = simulate_sweep(cfg, effective_levels(cfg));
  const double k0_used = cfg.k0_override.value_or(cfg.mic.k0());
  const auto thd_c = corrected_thd(cfg, runs, k0_used);

  ExperimentOutput out{new_report(cfg), {}, {}, {}, {}};
  auto& rep = out.report;
  rep.columns.push_back({"ym", "1"});
  rep.columns.push_back({"reduction_factor", "ratio"});
  rep.metadata.push_back({"method", std::string(method_name(cfg.method))});

  LineChart chart{"THD vs excitation level", "reference level [dB SPL]",
                  "THD [%]", false, {}};
  auto orig = series("unprocessed", true), corr = series("corrected", true);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    const double t0 = thd(r.original);
    auto values = core_values(cfg, r.level, r.original, t0, thd_c[i], k0_used);
    values.push_back(r.ym);
    values.push_back(t0 / thd_c[i]);
    orig.points.emplace_back(r.level, 100.0 * t0);
    corr.points.emplace_back(r.level, 100.0 * thd_c[i]);
    rep.rows.push_back({"level", std::move(values)});
  }
  chart.series = {orig, corr};
  out.charts.push_back({"thd_vs_level", std::move(chart)});
  return out;
}

ExperimentOutput run_k0_sweep_estimate(const ExperimentConfig& cfg) {
  require_synthetic(cfg);
  const auto runs = simulate_sweep(cfg, effective_levels(cfg));
  std::vector<LevelReport> reports;
  for (const auto& r : runs) reports.push_back({r.level, r.original});
  K0Estimate est = estimate_k0_sweep(reports, cfg.gate_margin_db);
  const double k0_used = cfg.k0_override.value_or(est.aggregate);
  const auto thd_c = corrected_thd(cfg, runs, k0_used);

  ExperimentOutput out{new_report(cfg), {}, {}, {}, {}};
  auto& rep = out.report;
  rep.columns.push_back({"k0_estimate", "V"});
  rep.columns.push_back({"valid", "bool"});
  rep.metadata.push_back({"k0_aggregate", format_number(est.aggregate)});
  rep.metadata.push_back({"k0_physical", format_number(cfg.mic.k0())});

  LineChart chart{"Estimated K0 per level", "reference level [dB SPL]",
                  "K0 [V]", false, {}};
  auto points = series("per-level estimate", true);
  auto agg = series("aggregate (median)"), phys = series("physical K0");
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    const auto& e = est.per_level[i];
    auto values = core_values(cfg, r.level, r.original, thd(r.original),
                              thd_c[i], k0_used);
    values.push_back(e.k0);
    values.push_back(e.valid ? 1.0 : 0.0);
    rep.rows.push_back({std::string(reason_name(e.reason)), std::move(values)});
    if (e.valid) points.points.emplace_back(r.level, e.k0);
    agg.points.emplace_back(r.level, est.aggregate);
    phys.points.emplace_back(r.level, cfg.mic.k0());
  }
  chart.series = {points, agg, phys};
  out.charts.push_back({"k0_estimate", std::move(chart)});
  out.k0_estimate = std::move(est);
  return out;
}

ExperimentOutput run_single_tone_correction(const ExperimentConfig& cfg) {
  const double requested_level = effective_levels(cfg).front();
  SampledSignal u = SampledSignal::zeros(0, cfg.sample_rate, Unit::kVolts);
  int fb = 0;
  if (cfg.input == InputSource::kWav) {
    u = ingest_wav(cfg);
    fb = nearest_bin(cfg.fundamental_hz, u.sample_rate(), u.size());
  } else {
    const ToneGrid grid = tone_at_level(cfg, requested_level);
    fb = grid.tones.front().bin;
    u = simulate_at_level(cfg, grid, requested_level, 0);
  }
  const int nh = harmonic_count(fb, u.size());
  const Spectrum s0 = amplitude_spectrum(u);
  const HarmonicReport h0 = harmonics(s0, fb, nh);
  const double level = cfg.input == InputSource::kWav
                           ? spl_of(cfg.mic, h0.magnitude(1))
                           : requested_level;
  const double k0_used = cfg.k0_override
                             ? *cfg.k0_override
                             : (cfg.input == InputSource::kWav
                                    ? estimate_k0(h0)
                                    : cfg.mic.k0());
  const double t0 = thd(h0);

  ExperimentOutput out{new_report(cfg), {}, {}, {}, {}};
  auto& rep = out.report;
  for (const char* c : {"h2_reduction_db", "h3_change_db", "h2_below_h1_db"}) {
    rep.columns.push_back({c, "dB"});
  }
  rep.columns.push_back({"domain_clamps", "count"});
  rep.metadata.push_back({"fundamental_hz", format_number(fb * s0.bin_hz())});
  rep.metadata.push_back(
      {"ym", format_number(displacement_amplitude(cfg.mic, level))});

  auto add_row = [&](const std::string& label, const HarmonicReport& h,
                     std::size_t clamps) {
    const double tc = thd(h);
    auto values = core_values(cfg, level, h0, t0, tc, k0_used);
    // Harmonic columns describe the row's own signal.
    values[1] = spl_of(cfg.mic, h.magnitude(1));
    values[2] = spl_of(cfg.mic, h.magnitude(2));
    values[3] = spl_of(cfg.mic, h.magnitude(3));
    values.push_back(reduction_db(h0.magnitude(2), h.magnitude(2)));
    values.push_back(amplitude_db(h.magnitude(3)) -
                     amplitude_db(h0.magnitude(3)));
    values.push_back(reduction_db(h.magnitude(1), h.magnitude(2)));
    values.push_back(static_cast<double>(clamps));
    rep.rows.push_back({label, std::move(values)});
  };

  out.spectra.push_back({"original", s0});
  add_row("original", h0, 0);
  for (CorrectionMethod m :
       {CorrectionMethod::kExactSqrt, CorrectionMethod::kQuadraticApprox}) {
    CorrectionStats stats;
    const SampledSignal c = apply_correction(cfg, u, k0_used, m, &stats);
    Spectrum sc = amplitude_spectrum(c);
    add_row(std::string(method_name(m)), harmonics(sc, fb, nh),
            stats.domain_clamps);
    out.spectra.push_back({std::string(method_name(m)), std::move(sc)});
  }
  out.charts.push_back(
      {"single_tone_correction",
       spectrum_chart("Single-tone correction", out.spectra,
                      (nh + 1) * fb * s0.bin_hz(), cfg.mic)});
  return out;
}

ExperimentOutput run_thd_vs_k0(const ExperimentConfig& cfg) {
  if (cfg.k0_grid_points < 2) {
    throw Error(ErrorCategory::kInvalidParameter,
                "K0 grid needs at least two points");
  }
  const double requested_level = effective_levels(cfg).front();
  SampledSignal u = SampledSignal::zeros(0, cfg.sample_rate, Unit::kVolts);
  int fb = 0;
  if (cfg.input == InputSource::kWav) {
    u = ingest_wav(cfg);
    fb = nearest_bin(cfg.fundamental_hz, u.sample_rate(), u.size());
  } else {
    const ToneGrid grid = tone_at_level(cfg, requested_level);
    fb = grid.tones.front().bin;
    u = simulate_at_level(cfg, grid, requested_level, 0);
  }
  const int nh = harmonic_count(fb, u.size());
  const HarmonicReport h0 = harmonics(u, fb, nh);
  const double t0 = thd(h0);
  const double level = cfg.input == InputSource::kWav
                           ? spl_of(cfg.mic, h0.magnitude(1))
                           : requested_level;
  const double k0_est = estimate_k0(h0);
  const double k0_ref = cfg.k0_override.value_or(
      cfg.input == InputSource::kWav ? k0_est : cfg.mic.k0());

  const int n = cfg.k0_grid_points;
  struct Point {
    double ratio, thd_exact, thd_approx;
    std::size_t clamps;
  };
  const auto points = detail::parallel_map(
      static_cast<std::size_t>(n), [&](std::size_t i) {
        const double exponent =
            std::log2(kGridLowRatio) +
            (std::log2(kGridHighRatio) - std::log2(kGridLowRatio)) *
                static_cast<double>(i) / static_cast<double>(n - 1);
        const double ratio = std::exp2(exponent);
        CorrectionStats stats;
        const auto ce = apply_correction(cfg, u, ratio * k0_ref,
                                         CorrectionMethod::kExactSqrt, &stats);
        const auto ca = apply_correction(cfg, u, ratio * k0_ref,
                                         CorrectionMethod::kQuadraticApprox);
        return Point{ratio, thd(harmonics(ce, fb, nh)),
                     thd(harmonics(ca, fb, nh)), stats.domain_clamps};
      });

  std::size_t nearest = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (std::abs(std::log(points[i].ratio * k0_ref / k0_est)) <
        std::abs(std::log(points[nearest].ratio * k0_ref / k0_est))) {
      nearest = i;
    }
  }
  auto argmin = [&](auto member) {
    return std::min_element(points.begin(), points.end(),
                            [&](const Point& a, const Point& b) {
                              return a.*member < b.*member;
                            })->ratio * k0_ref;
  };

  ExperimentOutput out{new_report(cfg), {}, {}, {}, {}};
  auto& rep = out.report;
  rep.columns.push_back({"k0_ratio", "ratio"});
  rep.columns.push_back({"thd_exact", "ratio"});
  rep.columns.push_back({"thd_approx", "ratio"});
  rep.columns.push_back({"exact_domain_clamps", "count"});
  rep.columns.push_back({"nearest_estimate", "bool"});
  rep.metadata.push_back({"k0_reference", format_number(k0_ref)});
  rep.metadata.push_back({"k0_estimate", format_number(k0_est)});
  rep.metadata.push_back({"argmin_k0_exact", format_number(argmin(&Point::thd_exact))});
  rep.metadata.push_back({"argmin_k0_approx", format_number(argmin(&Point::thd_approx))});
  rep.metadata.push_back({"method", std::string(method_name(cfg.method))});

  LineChart chart{"THD vs correction K0", "K0 [V]", "THD [%]", true, {}};
  auto none = series("unprocessed"), exact = series("exact_sqrt", true),
       approx = series("quadratic_approx", true);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point& p = points[i];
    const double k0 = p.ratio * k0_ref;
    const double tc = cfg.method == CorrectionMethod::kExactSqrt ? p.thd_exact
                                                                 : p.thd_approx;
    auto values = core_values(cfg, level, h0, t0, tc, k0);
    values.push_back(p.ratio);
    values.push_back(p.thd_exact);
    values.push_back(p.thd_approx);
    values.push_back(static_cast<double>(p.clamps));
    values.push_back(i == nearest ? 1.0 : 0.0);
    rep.rows.push_back({"grid", std::move(values)});
    none.points.emplace_back(k0, 100.0 * t0);
    exact.points.emplace_back(k0, 100.0 * p.thd_exact);
    approx.points.emplace_back(k0, 100.0 * p.thd_approx);
  }
  chart.series = {none, exact, approx};
  out.charts.push_back({"thd_vs_k0", std::move(chart)});
  return out;
}

ExperimentOutput run_imd(const ExperimentConfig& cfg) {
  require_synthetic(cfg);
  const bool two_tone = cfg.experiment == Experiment::kTwoTone;
  if (!two_tone && cfg.experiment != Experiment::kMultitone) {
    throw Error(ErrorCategory::kInvalidParameter,
                "run_imd needs the two_tone or multitone experiment");
  }
  if (!two_tone && cfg.tone_count < kMinMultitoneCount) {
    throw Error(ErrorCategory::kInvalidParameter,
                "multitone needs at least 8 tones");
  }
  const double level = effective_levels(cfg).front();
  const std::vector<double> targets =
      two_tone ? std::vector<double>(kTwoToneTargetsHz.begin(),
                                     kTwoToneTargetsHz.end())
               : log_spaced(kMultitoneLowHz, kMultitoneHighHz, cfg.tone_count);
  const std::vector<double> amplitudes(targets.size(),
                                       spl_to_pressure_peak(level));
  const auto phases =
      random_phases(static_cast<int>(targets.size()), cfg.seed);
  const ToneGrid grid = coherent_tone_grid(targets, amplitudes, phases,
                                           cfg.sample_rate, cfg.frame_length);
  const SampledSignal p = synthesize(grid, Unit::kPascals);
  SampledSignal u = SampledSignal::zeros(0, cfg.sample_rate, Unit::kVolts);
  try {
    u = simulate(pressure_to_displacement_ratio(p, cfg.mic), cfg.mic,
                 model_config(cfg, 0));
  } catch (const DomainError& e) {
    throw DomainError("level " + format_number(level) +
                          " dB SPL per tone drives the capsule out of the "
                          "series convergence region (" + e.what() + ")",
                      e.sample_index());
  }
  const double k0_used = cfg.k0_override.value_or(cfg.mic.k0());
  const SampledSignal c = apply_correction(cfg, u, k0_used, cfg.method);

  ImdOutcome imd{imd_products(u, grid, 2), imd_products(c, grid, 2), {}, 0.0,
                 0.0, crest_factor(p)};
  std::vector<double> intermod;
  for (std::size_t i = 0; i < imd.before.products.size(); ++i) {
    const auto& b = imd.before.products[i];
    const auto& a = imd.after.products[i];
    const double red = reduction_db(std::abs(b.amplitude), std::abs(a.amplitude));
    imd.products.push_back({b, a, red});
    if (!b.is_harmonic()) intermod.push_back(red);
  }
  double sum = 0.0;
  for (double r : intermod) sum += r;
  imd.mean_intermod_reduction_db = sum / static_cast<double>(intermod.size());
  imd.min_intermod_reduction_db =
      *std::min_element(intermod.begin(), intermod.end());

  ExperimentOutput out{new_report(cfg), {}, {}, {}, {}};
  auto& rep = out.report;
  rep.columns = {{"level_db_spl", "dB SPL per tone"},
                 {"product_hz", "Hz"},
                 {"order", "1"},
                 {"is_harmonic", "bool"},
                 {"before_db", "dB SPL"},
                 {"after_db", "dB SPL"},
                 {"reduction_db", "dB"}};
  std::string bins, freqs;
  for (const Tone& t : grid.tones) {
    bins += (bins.empty() ? "" : " ") + std::to_string(t.bin);
    freqs += (freqs.empty() ? "" : " ") + format_number(grid.frequency(t.bin));
  }
  rep.metadata = {
      {"tone_bins", bins},
      {"tone_hz", freqs},
      {"k0_used", format_number(k0_used)},
      {"method", std::string(method_name(cfg.method))},
      {"crest_factor", format_number(imd.crest_factor)},
      {"mean_intermod_reduction_db",
       format_number(imd.mean_intermod_reduction_db)},
      {"min_intermod_reduction_db",
       format_number(imd.min_intermod_reduction_db)}};
  for (const auto& pr : imd.products) {
    rep.rows.push_back(
        {product_label(pr.before),
         {level, grid.frequency(pr.before.bin),
          static_cast<double>(pr.before.order),
          pr.before.is_harmonic() ? 1.0 : 0.0,
          spl_of(cfg.mic, std::abs(pr.before.amplitude)),
          spl_of(cfg.mic, std::abs(pr.after.amplitude)), pr.reduction_db}});
  }

  out.spectra.push_back({"original", amplitude_spectrum(u)});
  out.spectra.push_back({"corrected", amplitude_spectrum(c)});
  double top = 0.0;
  for (const auto& pr : imd.products) {
    top = std::max(top, grid.frequency(pr.before.bin));
  }
  out.charts.push_back(
      {std::string(experiment_name(cfg.experiment)),
       spectrum_chart(two_tone ? "Two-tone correction" : "Multitone correction",
                      out.spectra, 1.2 * top, cfg.mic)});
  out.imd = std::move(imd);
  return out;
}

ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
  if (is_sweep(cfg.experiment) && effective_levels(cfg).empty()) {
    throw Error(ErrorCategory::kInvalidParameter, "empty level sweep");
  }
  if (effective_levels(cfg).empty()) {
    throw Error(ErrorCategory::kInvalidParameter, "no excitation level");
  }
  switch (cfg.experiment) {
    case Experiment::kHarmonicSweep: return run_harmonic_sweep(cfg);
    case Experiment::kK0SweepEstimate: return run_k0_sweep_estimate(cfg);
    case Experiment::kSingleToneCorrection:
      return run_single_tone_correction(cfg);
    case Experiment::kThdVsLevel: return run_thd_vs_level(cfg);
    case Experiment::kThdVsK0: return run_thd_vs_k0(cfg);
    case Experiment::kTwoTone:
    case Experiment::kMultitone: return run_imd(cfg);
  }
  throw Error(ErrorCategory::kInvalidParameter, "unknown experiment");
}

void write_report_csv(std::ostream& out, const ExperimentReport& report) {
  out << "# experiment: " << experiment_name(report.experiment) << '\n';
  out << "# config_hash: " << report.config_hash << '\n';
  out << "# seed: " << report.seed << '\n';
  for (const auto& [k, v] : report.metadata) out << "# " << k << ": " << v << '\n';
  out << "# units:";
  for (const auto& c : report.columns) out << ' ' << c.name << '=' << c.unit << ';';
  out << '\n';
  out << "label";
  for (const auto& c : report.columns) out << ',' << c.name;
  out << '\n';
  for (const auto& row : report.rows) {
    out << row.label;
    for (double v : row.values) out << ',' << format_number(v);
    out << '\n';
  }
}

std::vector<std::filesystem::path> write_outputs(const ExperimentOutput& output,
                                                 const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) {
    throw Error(ErrorCategory::kIo, "cannot create " + cfg.output_dir.string() +
                                        ": " + ec.message());
  }
  std::vector<fs::path> written;
  auto open = [&](const std::string& name) {
    const fs::path path = cfg.output_dir / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCategory::kIo, "cannot write " + path.string());
    written.push_back(path);
    return f;
  };

  {
    auto f = open("report.csv");
    write_report_csv(f, output.report);
  }
  for (const auto& s : output.spectra) {
    auto f = open("spectrum_" + s.name + ".csv");
    write_spectrum_csv(f, s.spectrum, Unit::kVolts);
  }
  if (output.k0_estimate) {
    auto f = open("k0_estimate.csv");
    write_k0_estimate_csv(f, *output.k0_estimate);
  }
  if (cfg.write_svg) {
    for (const auto& c : output.charts) {
      auto f = open(c.name + ".svg");
      write_svg(f, c.chart);
    }
  }

  nlohmann::json meta;
  meta["experiment"] = experiment_name(output.report.experiment);
  meta["config_hash"] = output.report.config_hash;
  meta["seed"] = output.report.seed;
  meta["generated_at"] = iso_utc_now();
  meta["config"] = canonical_config(cfg);
  for (const auto& [k, v] : output.report.metadata) meta["metadata"][k] = v;
  for (const auto& p : written) meta["files"].push_back(p.filename().string());
  {
    auto f = open("report_meta.json");
    f << meta.dump(2) << '\n';
  }
  return written;
}

}  // namespace micdist
