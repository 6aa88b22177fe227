#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "micdist/signal.hpp"

namespace micdist {

// Coherent (bin-aligned) analysis with a rectangular window. Every stimulus
// tone sits exactly on a DFT bin, so tone, harmonic and intermodulation
// amplitudes are read off single bins without leakage.

inline constexpr std::size_t kDefaultFrameLength = 1u << 16;
inline constexpr double kDefaultSampleRate = 48000.0;
inline constexpr int kDefaultHarmonicCount = 10;

struct Tone {
  int bin = 0;
  double amplitude = 0.0;  // peak
  double phase = 0.0;      // radians, of a sine
};

struct ToneGrid {
  std::size_t frame_length = kDefaultFrameLength;
  double sample_rate = kDefaultSampleRate;
  std::vector<Tone> tones;

  double bin_hz() const noexcept {
    return sample_rate / static_cast<double>(frame_length);
  }
  double frequency(int bin) const noexcept { return bin * bin_hz(); }

  // Throws invalid-parameter on duplicate bins, bin <= 0 or
  // bin >= frame_length / 2.
  void validate() const;
};

int nearest_bin(double frequency_hz, double sample_rate,
                std::size_t frame_length);

ToneGrid single_tone_grid(double frequency_hz, double amplitude,
                          double sample_rate = kDefaultSampleRate,
                          std::size_t frame_length = kDefaultFrameLength,
                          double phase = 0.0);

// Places one tone near each target frequency. Bins are forced odd, so every
// second-order product lands on an even bin and every odd-order product on
// an odd bin; each bin is then nudged in steps of 2 until all second-order
// products (harmonics, sums, differences) are mutually distinct.
ToneGrid coherent_tone_grid(std::span<const double> target_hz,
                            std::span<const double> amplitudes,
                            std::span<const double> phases,
                            double sample_rate = kDefaultSampleRate,
                            std::size_t frame_length = kDefaultFrameLength);

std::vector<double> log_spaced(double first, double last, int count);

// Uniform phases in [0, 2 pi) from a seeded generator.
std::vector<double> random_phases(int count, std::uint64_t seed);

// Sum of sines at the grid's exact bin frequencies.
SampledSignal synthesize(const ToneGrid& grid,
                         Unit unit = Unit::kDimensionless);

double crest_factor(const SampledSignal& s);

// One-sided spectrum scaled to peak amplitudes: bins 1..N/2-1 hold 2 X_k / N,
// bin 0 and (even N) bin N/2 hold X_k / N. Phase is relative to a cosine.
struct Spectrum {
  std::size_t frame_length = 0;
  double sample_rate = 0.0;
  std::vector<std::complex<double>> bins;

  double bin_hz() const noexcept {
    return sample_rate / static_cast<double>(frame_length);
  }
  // Sum of squared samples recovered from the bins.
  double energy() const noexcept;
};

Spectrum amplitude_spectrum(const SampledSignal& s);

// RMS-equivalent noise amplitude per bin: median magnitude over bins
// 1..N/2-1 not in `excluded`, divided by sqrt(ln 2) (Rayleigh median to RMS).
double noise_floor(const Spectrum& spectrum, std::span<const int> excluded);

struct HarmonicReport {
  int fundamental_bin = 0;
  std::vector<std::complex<double>> amplitudes;  // harmonics 1..n, peak
  double noise_floor = 0.0;
  int n_harmonics = 0;

  // Magnitude of harmonic k (1-based).
  double magnitude(int k) const { return std::abs(amplitudes.at(k - 1)); }
};

// Harmonics 1..n of a bin-aligned fundamental. The frame is the whole
// signal. Throws invalid-parameter when n * fundamental_bin reaches Nyquist.
HarmonicReport harmonics(const SampledSignal& s, int fundamental_bin, int n);
HarmonicReport harmonics(const Spectrum& spectrum, int fundamental_bin, int n);

// As above, checking that the signal length matches the grid's frame
// (invalid-input otherwise). Uses the grid's first tone as fundamental.
HarmonicReport harmonics(const SampledSignal& s, const ToneGrid& grid, int n);

// Largest harmonic count <= kDefaultHarmonicCount that stays below Nyquist.
int default_harmonic_count(int fundamental_bin, std::size_t frame_length);

// sqrt(sum_{k>=2} |V_k|^2) / |V_1|.
double thd(const HarmonicReport& report);

struct ImdProduct {
  int order = 0;                  // sum of |coefficients|
  int bin = 0;
  std::vector<int> coefficients;  // one per grid tone; first nonzero > 0
  std::complex<double> amplitude;

  // True for k * f_i products (a single nonzero coefficient).
  bool is_harmonic() const noexcept;
};

struct ImdReport {
  ToneGrid grid;
  std::vector<ImdProduct> products;  // sorted by order, then bin
  double noise_floor = 0.0;
};

// All products |sum k_i f_i| with 2 <= sum |k_i| <= max_order and a non-DC
// bin, without amplitudes. Throws CollisionError listing the bins that
// coincide with a stimulus tone and invalid-parameter for products at or
// above Nyquist.
std::vector<ImdProduct> enumerate_products(const ToneGrid& grid,
                                           int max_order);

ImdReport imd_products(const SampledSignal& s, const ToneGrid& grid,
                       int max_order);

// Columns bin_hz, magnitude_db (dB re 1 unit peak), phase_rad.
void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum,
                        Unit unit);

}  // namespace micdist
