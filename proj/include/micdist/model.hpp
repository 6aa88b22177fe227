#pragma once

#include <cstdint>
#include <optional>

#include "micdist/signal.hpp"

namespace micdist {

inline constexpr double kReferencePressurePa = 20e-6;

// Default sensitivity. Chosen so that a 110 dB SPL sine drives the capsule
// to y_m = 0.02 with K0 = 8.85 V, where the approximate inverse reduces THD
// by 1/y_m = 50.
inline constexpr double kDefaultSensitivityVPerPa = 19.8e-3;

// Physical parameters of a single-backplate condenser capsule. K0 is derived
// once at construction.
class MicParams {
 public:
  // Throws invalid-parameter on U0, C0, h_g or S not strictly positive, or
  // C_P negative.
  MicParams(double polarization_voltage, double static_capacitance,
            double parasitic_capacitance, double air_gap,
            double linear_sensitivity);

  // U0 = 10.62 V, C0 = 2.5 pF, C_P = 0.5 pF (K0 = 8.85 V), h_g = 2 um,
  // S = 19.8 mV/Pa.
  static MicParams defaults();

  double polarization_voltage() const noexcept { return polarization_voltage_; }
  double static_capacitance() const noexcept { return static_capacitance_; }
  double parasitic_capacitance() const noexcept {
    return parasitic_capacitance_;
  }
  double air_gap() const noexcept { return air_gap_; }
  double linear_sensitivity() const noexcept { return linear_sensitivity_; }
  double k0() const noexcept { return k0_; }

  MicParams with_sensitivity(double sensitivity) const;

 private:
  double polarization_voltage_;
  double static_capacitance_;
  double parasitic_capacitance_;
  double air_gap_;
  double linear_sensitivity_;
  double k0_;
};

// K0 = U0 * C0 / (C_P + C0).
double k0_from_physical(double polarization_voltage, double static_capacitance,
                        double parasitic_capacitance);
double k0_from_physical(const MicParams& mic);

struct NonlinearityConfig {
  int order = 2;
  std::optional<double> clip_level;  // volts, symmetric
  std::optional<double> noise_rms;   // volts, white Gaussian
  std::uint64_t seed = 0;
  bool dc_block = false;             // subtract frame mean before noise/clip
};

// y(t) = S * p(t) / K0, so the linear term of the series gives u_lin = S * p.
SampledSignal pressure_to_displacement_ratio(const SampledSignal& pressure,
                                             const MicParams& mic);

// u = K0 * sum_{k=1..order} (-1)^(k+1) y^k, then optional mean removal,
// additive noise and hard clip, in that order.
// Throws DomainError when max|y| >= 1 and invalid-parameter when order < 1.
SampledSignal simulate(const SampledSignal& displacement, const MicParams& mic,
                       const NonlinearityConfig& cfg);

// Memoryless series value for a single sample.
double capsule_response(double y, double k0, int order);

// Level conversions. Levels are RMS re 20 uPa; amplitudes are peak.
double spl_to_pressure_rms(double level_db_spl);
double pressure_rms_to_spl(double pressure_rms);
double spl_to_pressure_peak(double level_db_spl);

// Peak displacement ratio y_m produced by a sine at `level_db_spl`.
double displacement_amplitude(const MicParams& mic, double level_db_spl);

// Inverse of displacement_amplitude.
double level_for_displacement(const MicParams& mic, double displacement_peak);

// Equivalent input level of a peak output amplitude, via the linear
// sensitivity.
double output_amplitude_to_spl(const MicParams& mic, double volts_peak);

// Largest |u| the noiseless series reaches for a sine at `level_db_spl`.
// Used to place the clip threshold at a given level.
double peak_output_at_level(const MicParams& mic, int order,
                            double level_db_spl);

}  // namespace micdist
