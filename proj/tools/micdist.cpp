// Command-line front end: runs one experiment (or corrects a WAV file) and
// writes the reports into the output directory.

#include <CLI11.hpp>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "micdist/error.hpp"
#include "micdist/pipeline.hpp"
#include "micdist/wav.hpp"

namespace {

using micdist::Experiment;
using micdist::ExperimentConfig;

int report_error(std::string_view category, const std::string& message) {
  nlohmann::json j;
  j["error"] = category;
  j["message"] = message;
  std::cerr << j.dump() << '\n';
  return 1;
}

struct MicFlags {
  double u0 = micdist::MicParams::defaults().polarization_voltage();
  double c0 = micdist::MicParams::defaults().static_capacitance();
  double cp = micdist::MicParams::defaults().parasitic_capacitance();
  double air_gap = micdist::MicParams::defaults().air_gap();
  double sensitivity = micdist::MicParams::defaults().linear_sensitivity();
};

struct CorrectFlags {
  std::string input;
  std::string output;
  double volts_full_scale = 1.0;
  int channel = 0;
  std::optional<double> k0;
  std::string encoding = "float32";
};

std::optional<micdist::WavEncoding> parse_encoding(const std::string& s) {
  using micdist::WavEncoding;
  if (s == "pcm16") return WavEncoding::kPcm16;
  if (s == "pcm24") return WavEncoding::kPcm24;
  if (s == "pcm32") return WavEncoding::kPcm32;
  if (s == "float32") return WavEncoding::kFloat32;
  if (s == "float64") return WavEncoding::kFloat64;
  return std::nullopt;
}

int run_correct(const CorrectFlags& f, const MicFlags& m,
                micdist::CorrectionMethod method) {
  const auto encoding = parse_encoding(f.encoding);
  if (!encoding) {
    return report_error("invalid_parameter", "unknown encoding " + f.encoding);
  }
  const micdist::MicParams mic(m.u0, m.c0, m.cp, m.air_gap, m.sensitivity);
  const auto u = micdist::read_wav(f.input, f.channel, f.volts_full_scale);
  micdist::CorrectionConfig cc{f.k0.value_or(mic.k0()), method,
                               micdist::ClampPolicy::kClampToVertex};
  const auto result = micdist::correct(u, cc);
  micdist::write_wav(f.output, result.signal, *encoding, f.volts_full_scale);
  nlohmann::json j;
  j["samples"] = result.stats.samples_processed;
  j["domain_clamps"] = result.stats.domain_clamps;
  j["k0"] = cc.k0;
  std::cout << j.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Condenser microphone distortion experiments and correction.\n"
      "Levels are dB SPL (re 20 uPa); K0 and signals are volts."};
  app.set_config("--config", "", "Flat key = value file; flags override it");
  app.require_subcommand(1);

  MicFlags mic;
  ExperimentConfig cfg;
  std::string method = "quadratic_approx";
  std::vector<double> levels;
  std::optional<double> k0;
  std::string wav;
  std::optional<double> wav_fs;
  std::optional<double> clip, snr;
  std::string output_dir = ".";
  std::size_t frame_length = cfg.frame_length;

  auto* g = app.add_option_group("microphone");
  g->add_option("--u0", mic.u0, "Polarization voltage [V]");
  g->add_option("--c0", mic.c0, "Static capsule capacitance [F]");
  g->add_option("--cp", mic.cp, "Parasitic capacitance [F]");
  g->add_option("--air-gap", mic.air_gap, "Air gap thickness [m]");
  g->add_option("--sensitivity", mic.sensitivity,
                "Linear sensitivity S [V/Pa]");

  app.add_option("--levels", levels,
                 "Excitation levels [dB SPL], comma separated; per tone for "
                 "two_tone and multitone")
      ->delimiter(',');
  app.add_option("--fundamental-hz", cfg.fundamental_hz,
                 "Single-tone frequency target [Hz], snapped to a bin");
  app.add_option("--method", method, "exact_sqrt | quadratic_approx")
      ->check(CLI::IsMember({"exact_sqrt", "quadratic_approx"}));
  app.add_option("--k0", k0, "K0 used by the corrector [V]");
  app.add_option("--wav", wav, "Analyze this recording instead of a synthetic tone");
  app.add_option("--wav-channel", cfg.wav_channel, "Channel index in the WAV");
  app.add_option("--wav-volts-full-scale", wav_fs,
                 "Volts corresponding to digital full scale [V]");
  app.add_option("-o,--output-dir", output_dir, "Directory for the reports");
  app.add_option("--seed", cfg.seed, "Seed for noise and multitone phases");
  app.add_option("--sample-rate", cfg.sample_rate, "Sample rate [Hz]");
  app.add_option("--frame-length", frame_length, "Analysis frame [samples]");
  app.add_option("--order", cfg.order, "Capsule series order (1 = linear)");
  app.add_option("--clip-above-spl", clip,
                 "Hard clip at the output peak of this level [dB SPL]");
  app.add_option("--snr-db", snr,
                 "Additive noise, SNR re the 94 dB SPL output [dB]");
  app.add_flag("--dc-block", cfg.dc_block, "Remove the capsule output mean");
  app.add_flag("--remove-corrected-mean", cfg.remove_corrected_mean,
               "Remove the corrected signal mean");
  app.add_option("--gate-margin-db", cfg.gate_margin_db,
                 "K0 estimator gate above the noise floor [dB]");
  app.add_option("--k0-grid-points", cfg.k0_grid_points,
                 "thd_vs_k0 grid size over [0.25, 4] x K0");
  app.add_option("--tones", cfg.tone_count, "multitone tone count (>= 8)");
  app.add_flag("--svg", cfg.write_svg, "Also write SVG charts");

  std::optional<Experiment> chosen;
  for (Experiment e :
       {Experiment::kHarmonicSweep, Experiment::kK0SweepEstimate,
        Experiment::kSingleToneCorrection, Experiment::kThdVsLevel,
        Experiment::kThdVsK0, Experiment::kTwoTone, Experiment::kMultitone}) {
    auto* sub = app.add_subcommand(std::string(micdist::experiment_name(e)),
                                   "Run the " +
                                       std::string(micdist::experiment_name(e)) +
                                       " experiment");
    sub->fallthrough();
    sub->callback([&chosen, e] { chosen = e; });
  }

  CorrectFlags cf;
  bool correcting = false;
  auto* corr = app.add_subcommand("correct", "Correct a WAV recording");
  corr->fallthrough();
  corr->add_option("input", cf.input, "Input WAV")->required();
  corr->add_option("output", cf.output, "Output WAV")->required();
  corr->add_option("--volts-full-scale", cf.volts_full_scale,
                   "Volts at digital full scale [V]");
  corr->add_option("--channel", cf.channel, "Input channel index");
  corr->add_option("--encoding", cf.encoding,
                   "pcm16 | pcm24 | pcm32 | float32 | float64");
  corr->callback([&] { correcting = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    const auto m = micdist::parse_method(method);
    if (correcting) {
      cf.k0 = k0;
      return run_correct(cf, mic, *m);
    }
    cfg.experiment = *chosen;
    cfg.mic = micdist::MicParams(mic.u0, mic.c0, mic.cp, mic.air_gap,
                                 mic.sensitivity);
    cfg.levels_db_spl = levels;
    cfg.method = *m;
    cfg.k0_override = k0;
    if (!wav.empty()) {
      cfg.input = micdist::InputSource::kWav;
      cfg.wav_path = wav;
      cfg.wav_volts_full_scale = wav_fs;
    }
    cfg.output_dir = output_dir;
    cfg.frame_length = frame_length;
    cfg.clip_above_db_spl = clip;
    cfg.snr_db = snr;

    const auto output = micdist::run_experiment(cfg);
    const auto files = micdist::write_outputs(output, cfg);
    nlohmann::json j;
    j["experiment"] = micdist::experiment_name(cfg.experiment);
    j["config_hash"] = output.report.config_hash;
    for (const auto& f : files) j["files"].push_back(f.string());
    std::cout << j.dump() << '\n';
    return 0;
  } catch (const micdist::Error& e) {
    return report_error(micdist::category_name(e.category()), e.what());
  } catch (const std::exception& e) {
    return report_error("internal", e.what());
  }
}
