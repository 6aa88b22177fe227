#include "micdist/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <string>

#include "micdist/csv.hpp"
#include "micdist/error.hpp"
#include "micdist/fft.hpp"

namespace micdist {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string join_bins(const std::vector<int>& bins) {
  std::string s;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(bins[i]);
  }
  return s;
}

bool below_nyquist(long long bin, std::size_t frame_length) {
  return bin > 0 && 2 * bin < static_cast<long long>(frame_length);
}

}  // namespace

void ToneGrid::validate() const {
  if (frame_length == 0 || !(sample_rate > 0.0)) {
    throw Error(ErrorCategory::kInvalidParameter,
                "tone grid needs a positive frame length and sample rate");
  }
  std::set<int> seen;
  for (const Tone& t : tones) {
    if (!below_nyquist(t.bin, frame_length)) {
      throw Error(ErrorCategory::kInvalidParameter,
                  "tone bin " + std::to_string(t.bin) +
                      " outside (0, frame_length/2): would alias");
    }
    if (!seen.insert(t.bin).second) {
      throw Error(ErrorCategory::kInvalidParameter,
                  "duplicate tone bin " + std::to_string(t.bin));
    }
  }
}

int nearest_bin(double frequency_hz, double sample_rate,
                std::size_t frame_length) {
  return static_cast<int>(std::lround(
      frequency_hz * static_cast<double>(frame_length) / sample_rate));
}

ToneGrid single_tone_grid(double frequency_hz, double amplitude,
                          double sample_rate, std::size_t frame_length,
                          double phase) {
  ToneGrid grid{frame_length, sample_rate,
                {{nearest_bin(frequency_hz, sample_rate, frame_length),
                  amplitude, phase}}};
  grid.validate();
  return grid;
}

ToneGrid coherent_tone_grid(std::span<const double> target_hz,
                            std::span<const double> amplitudes,
                            std::span<const double> phases,
                            double sample_rate, std::size_t frame_length) {
  if (amplitudes.size() != target_hz.size() ||
      (!phases.empty() && phases.size() != target_hz.size())) {
    throw Error(ErrorCategory::kInvalidParameter,
                "tone targets, amplitudes and phases differ in length");
  }
  ToneGrid grid{frame_length, sample_rate, {}};
  std::set<int> products;
  const long long nyquist = static_cast<long long>(frame_length) / 2;

  for (std::size_t i = 0; i < target_hz.size(); ++i) {
    const double exact =
        target_hz[i] * static_cast<double>(frame_length) / sample_rate;
    int start = static_cast<int>(std::floor(exact));
    if (start % 2 == 0) ++start;  // start + 1 is the nearest odd bin

    auto accept = [&](int c, std::vector<int>& added) {
      if (!below_nyquist(c, frame_length)) return false;
      added.clear();
      added.push_back(2 * c);
      for (const Tone& t : grid.tones) {
        if (t.bin == c) return false;
        added.push_back(c + t.bin);
        added.push_back(std::abs(c - t.bin));
      }
      std::set<int> fresh;
      for (int p : added) {
        if (p >= nyquist || products.count(p) || !fresh.insert(p).second) {
          return false;
        }
      }
      return true;
    };

    std::vector<int> added;
    bool placed = false;
    for (int step = 0; step < static_cast<int>(nyquist) && !placed; step += 2) {
      for (int c : {start + step, start - step}) {
        if (accept(c, added)) {
          grid.tones.push_back(
              {c, amplitudes[i], phases.empty() ? 0.0 : phases[i]});
          products.insert(added.begin(), added.end());
          placed = true;
          break;
        }
      }
    }
    if (!placed) {
      throw Error(ErrorCategory::kInvalidParameter,
                  "cannot place a collision-free tone near " +
                      format_number(target_hz[i]) + " Hz");
    }
  }
  grid.validate();
  return grid;
}

std::vector<double> log_spaced(double first, double last, int count) {
  if (count < 1 || !(first > 0.0) || !(last > 0.0)) {
    throw Error(ErrorCategory::kInvalidParameter,
                "log spacing needs positive bounds and count");
  }
  std::vector<double> out(static_cast<std::size_t>(count));
  if (count == 1) {
    out[0] = first;
    return out;
  }
  const double ratio = std::log(last / first);
  for (int i = 0; i < count; ++i) {
    out[static_cast<std::size_t>(i)] =
        first * std::exp(ratio * i / static_cast<double>(count - 1));
  }
  return out;
}

std::vector<double> random_phases(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, kTwoPi);
  std::vector<double> out(static_cast<std::size_t>(std::max(count, 0)));
  for (double& p : out) p = dist(rng);
  return out;
}

SampledSignal synthesize(const ToneGrid& grid, Unit unit) {
  grid.validate();
  const std::size_t n_samples = grid.frame_length;
  std::vector<double> x(n_samples, 0.0);
  for (const Tone& t : grid.tones) {
    const auto bin = static_cast<std::uint64_t>(t.bin);
    for (std::size_t n = 0; n < n_samples; ++n) {
      // Reduce the phase index modulo N before scaling to keep the argument
      // small and exact.
      const std::uint64_t idx = (bin * n) % n_samples;
      x[n] += t.amplitude *
              std::sin(kTwoPi * static_cast<double>(idx) /
                           static_cast<double>(n_samples) +
                       t.phase);
    }
  }
  return SampledSignal(std::move(x), grid.sample_rate, unit);
}

double crest_factor(const SampledSignal& s) {
  const double r = s.rms();
  return r > 0.0 ? s.peak() / r : 0.0;
}

double Spectrum::energy() const noexcept {
  if (bins.empty()) return 0.0;
  const std::size_t last = frame_length / 2;
  const bool has_nyquist = frame_length % 2 == 0;
  double acc = std::norm(bins[0]);
  for (std::size_t k = 1; k < bins.size(); ++k) {
    acc += (k == last && has_nyquist) ? std::norm(bins[k])
                                      : 0.5 * std::norm(bins[k]);
  }
  return acc * static_cast<double>(frame_length);
}

Spectrum amplitude_spectrum(const SampledSignal& s) {
  Spectrum spec{s.size(), s.sample_rate(), real_dft(s.samples())};
  if (spec.bins.empty()) return spec;
  const double n = static_cast<double>(s.size());
  const std::size_t last = s.size() / 2;
  const bool has_nyquist = s.size() % 2 == 0;
  for (std::size_t k = 0; k < spec.bins.size(); ++k) {
    const bool single = k == 0 || (k == last && has_nyquist);
    spec.bins[k] *= (single ? 1.0 : 2.0) / n;
  }
  return spec;
}

double noise_floor(const Spectrum& spectrum, std::span<const int> excluded) {
  const std::size_t n_bins = spectrum.bins.size();
  if (n_bins < 2) return 0.0;
  std::vector<bool> skip(n_bins, false);
  skip[0] = true;
  if (spectrum.frame_length % 2 == 0) skip[n_bins - 1] = true;
  for (int b : excluded) {
    if (b >= 0 && static_cast<std::size_t>(b) < n_bins) {
      skip[static_cast<std::size_t>(b)] = true;
    }
  }
  std::vector<double> mags;
  mags.reserve(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) {
    if (!skip[k]) mags.push_back(std::abs(spectrum.bins[k]));
  }
  if (mags.empty()) return 0.0;
  const std::size_t mid = mags.size() / 2;
  std::nth_element(mags.begin(), mags.begin() + static_cast<long>(mid),
                   mags.end());
  double median = mags[mid];
  if (mags.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(
                                 mags.begin(),
                                 mags.begin() + static_cast<long>(mid)));
  }
  return median / std::sqrt(std::log(2.0));
}

HarmonicReport harmonics(const Spectrum& spectrum, int fundamental_bin,
                         int n) {
  if (fundamental_bin <= 0 || n < 1) {
    throw Error(ErrorCategory::kInvalidParameter,
                "need a positive fundamental bin and harmonic count");
  }
  const long long top = static_cast<long long>(n) * fundamental_bin;
  if (!below_nyquist(top, spectrum.frame_length)) {
    throw Error(ErrorCategory::kInvalidParameter,
                "harmonic " + std::to_string(n) + " of bin " +
                    std::to_string(fundamental_bin) +
                    " is at or above Nyquist");
  }
  HarmonicReport report;
  report.fundamental_bin = fundamental_bin;
  report.n_harmonics = n;
  report.amplitudes.reserve(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) {
    report.amplitudes.push_back(
        spectrum.bins[static_cast<std::size_t>(k * fundamental_bin)]);
  }
  std::vector<int> multiples;
  for (std::size_t b = static_cast<std::size_t>(fundamental_bin);
       b < spectrum.bins.size(); b += static_cast<std::size_t>(fundamental_bin)) {
    multiples.push_back(static_cast<int>(b));
  }
  report.noise_floor = noise_floor(spectrum, multiples);
  return report;
}

HarmonicReport harmonics(const SampledSignal& s, int fundamental_bin, int n) {
  if (s.empty()) {
    throw Error(ErrorCategory::kInvalidInput, "empty analysis frame");
  }
  return harmonics(amplitude_spectrum(s), fundamental_bin, n);
}

HarmonicReport harmonics(const SampledSignal& s, const ToneGrid& grid, int n) {
  grid.validate();
  if (grid.tones.empty()) {
    throw Error(ErrorCategory::kInvalidParameter, "grid has no fundamental");
  }
  if (s.size() != grid.frame_length || s.sample_rate() != grid.sample_rate) {
    throw Error(ErrorCategory::kInvalidInput,
                "signal length " + std::to_string(s.size()) +
                    " does not match frame length " +
                    std::to_string(grid.frame_length));
  }
  return harmonics(s, grid.tones.front().bin, n);
}

int default_harmonic_count(int fundamental_bin, std::size_t frame_length) {
  if (fundamental_bin <= 0) return 0;
  const auto max_k = static_cast<long long>((frame_length - 1) / 2) /
                     fundamental_bin;
  return static_cast<int>(
      std::min<long long>(kDefaultHarmonicCount, max_k));
}

double thd(const HarmonicReport& report) {
  if (report.n_harmonics < 2 ||
      report.amplitudes.size() != static_cast<std::size_t>(report.n_harmonics)) {
    throw Error(ErrorCategory::kInvalidParameter,
                "THD needs at least two harmonics");
  }
  const double v1 = report.magnitude(1);
  if (v1 == 0.0) {
    throw Error(ErrorCategory::kUndefinedThd, "fundamental amplitude is zero");
  }
  double acc = 0.0;
  for (int k = 2; k <= report.n_harmonics; ++k) {
    acc += std::norm(report.amplitudes[static_cast<std::size_t>(k - 1)]);
  }
  return std::sqrt(acc) / v1;
}

bool ImdProduct::is_harmonic() const noexcept {
  return std::count_if(coefficients.begin(), coefficients.end(),
                       [](int k) { return k != 0; }) == 1;
}

namespace {

void enumerate(const ToneGrid& grid, int max_order, std::size_t tone,
               int used, std::vector<int>& coeffs,
               std::vector<ImdProduct>& out) {
  if (tone == grid.tones.size()) {
    if (used < 2) return;
    auto first = std::find_if(coeffs.begin(), coeffs.end(),
                              [](int k) { return k != 0; });
    if (first == coeffs.end() || *first < 0) return;  // keep one of +-k
    long long bin = 0;
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      bin += static_cast<long long>(coeffs[i]) * grid.tones[i].bin;
    }
    bin = std::llabs(bin);
    if (bin == 0) return;
    out.push_back({used, static_cast<int>(bin), coeffs, {}});
    return;
  }
  const int remaining = max_order - used;
  for (int k = -remaining; k <= remaining; ++k) {
    coeffs[tone] = k;
    enumerate(grid, max_order, tone + 1, used + std::abs(k), coeffs, out);
  }
  coeffs[tone] = 0;
}

}  // namespace

std::vector<ImdProduct> enumerate_products(const ToneGrid& grid,
                                           int max_order) {
  grid.validate();
  if (max_order < 2) {
    throw Error(ErrorCategory::kInvalidParameter,
                "intermodulation order must be at least 2");
  }
  std::vector<ImdProduct> products;
  std::vector<int> coeffs(grid.tones.size(), 0);
  enumerate(grid, max_order, 0, 0, coeffs, products);

  std::set<int> tone_bins;
  for (const Tone& t : grid.tones) tone_bins.insert(t.bin);
  std::set<int> aliased, collided;
  for (const ImdProduct& p : products) {
    if (!below_nyquist(p.bin, grid.frame_length)) aliased.insert(p.bin);
    if (tone_bins.count(p.bin)) collided.insert(p.bin);
  }
  if (!collided.empty()) {
    std::vector<int> bins(collided.begin(), collided.end());
    throw CollisionError(
        "intermodulation products collide with stimulus tones at bins " +
            join_bins(bins),
        bins);
  }
  if (!aliased.empty()) {
    std::vector<int> bins(aliased.begin(), aliased.end());
    throw Error(ErrorCategory::kInvalidParameter,
                "intermodulation products at or above Nyquist at bins " +
                    join_bins(bins));
  }
  std::sort(products.begin(), products.end(),
            [](const ImdProduct& a, const ImdProduct& b) {
              if (a.order != b.order) return a.order < b.order;
              if (a.bin != b.bin) return a.bin < b.bin;
              return a.coefficients > b.coefficients;
            });
  return products;
}

ImdReport imd_products(const SampledSignal& s, const ToneGrid& grid,
                       int max_order) {
  grid.validate();
  if (s.size() != grid.frame_length) {
    throw Error(ErrorCategory::kInvalidInput,
                "signal length " + std::to_string(s.size()) +
                    " does not match frame length " +
                    std::to_string(grid.frame_length));
  }
  ImdReport report{grid, enumerate_products(grid, max_order), 0.0};
  const Spectrum spectrum = amplitude_spectrum(s);
  std::vector<int> occupied;
  for (const Tone& t : grid.tones) occupied.push_back(t.bin);
  for (ImdProduct& p : report.products) {
    p.amplitude = spectrum.bins[static_cast<std::size_t>(p.bin)];
    occupied.push_back(p.bin);
  }
  report.noise_floor = noise_floor(spectrum, occupied);
  return report;
}

void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum,
                        Unit unit) {
  out << "# magnitude_db: dB re 1 " << unit_name(unit)
      << " peak; phase_rad: relative to cosine\n";
  out << "bin_hz,magnitude_db,phase_rad\n";
  const double hz = spectrum.bin_hz();
  for (std::size_t k = 0; k < spectrum.bins.size(); ++k) {
    const auto& a = spectrum.bins[k];
    out << format_number(static_cast<double>(k) * hz) << ','
        << format_number(amplitude_db(std::abs(a))) << ','
        << format_number(std::arg(a)) << '\n';
  }
}

}  // namespace micdist
