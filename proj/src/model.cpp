#include "micdist/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "micdist/error.hpp"

namespace micdist {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw Error(ErrorCategory::kInvalidParameter,
                std::string(name) + " must be positive");
  }
}

}  // namespace

double k0_from_physical(double polarization_voltage, double static_capacitance,
                        double parasitic_capacitance) {
  require_positive(polarization_voltage, "polarization voltage");
  require_positive(static_capacitance, "static capacitance");
  if (!(parasitic_capacitance >= 0.0) || !std::isfinite(parasitic_capacitance)) {
    throw Error(ErrorCategory::kInvalidParameter,
                "parasitic capacitance must be non-negative");
  }
  return polarization_voltage * static_capacitance /
         (parasitic_capacitance + static_capacitance);
}

double k0_from_physical(const MicParams& mic) {
  return k0_from_physical(mic.polarization_voltage(), mic.static_capacitance(),
                          mic.parasitic_capacitance());
}

MicParams::MicParams(double polarization_voltage, double static_capacitance,
                     double parasitic_capacitance, double air_gap,
                     double linear_sensitivity)
    : polarization_voltage_(polarization_voltage),
      static_capacitance_(static_capacitance),
      parasitic_capacitance_(parasitic_capacitance),
      air_gap_(air_gap),
      linear_sensitivity_(linear_sensitivity),
      k0_(k0_from_physical(polarization_voltage, static_capacitance,
                           parasitic_capacitance)) {
  require_positive(air_gap, "air gap");
  require_positive(linear_sensitivity, "linear sensitivity");
}

MicParams MicParams::defaults() {
  return MicParams(10.62, 2.5e-12, 0.5e-12, 2e-6, kDefaultSensitivityVPerPa);
}

MicParams MicParams::with_sensitivity(double sensitivity) const {
  return MicParams(polarization_voltage_, static_capacitance_,
                   parasitic_capacitance_, air_gap_, sensitivity);
}

SampledSignal pressure_to_displacement_ratio(const SampledSignal& pressure,
                                             const MicParams& mic) {
  require_unit(pressure, Unit::kPascals);
  const double gain = mic.linear_sensitivity() / mic.k0();
  std::vector<double> y(pressure.samples().begin(), pressure.samples().end());
  for (double& v : y) v *= gain;
  return SampledSignal(std::move(y), pressure.sample_rate(),
                       Unit::kDimensionless);
}

double capsule_response(double y, double k0, int order) {
  // Horner on the alternating coefficients +1, -1, +1, ...
  double acc = (order % 2 == 1) ? 1.0 : -1.0;
  for (int k = order - 1; k >= 1; --k) {
    acc = ((k % 2 == 1) ? 1.0 : -1.0) + y * acc;
  }
  return k0 * y * acc;
}

SampledSignal simulate(const SampledSignal& displacement, const MicParams& mic,
                       const NonlinearityConfig& cfg) {
  require_unit(displacement, Unit::kDimensionless);
  if (cfg.order < 1) {
    throw Error(ErrorCategory::kInvalidParameter,
                "series order must be at least 1");
  }
  const auto y = displacement.samples();
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (std::abs(y[i]) >= 1.0) {
      throw DomainError("|y| >= 1 at sample " + std::to_string(i) +
                            ": capacitance series diverges",
                        i);
    }
  }

  const double k0 = mic.k0();
  std::vector<double> u(y.size());
  if (cfg.order == 2) {
    for (std::size_t i = 0; i < y.size(); ++i) u[i] = k0 * (y[i] - y[i] * y[i]);
  } else {
    for (std::size_t i = 0; i < y.size(); ++i) {
      u[i] = capsule_response(y[i], k0, cfg.order);
    }
  }

  if (cfg.dc_block && !u.empty()) {
    double m = 0.0;
    for (double v : u) m += v;
    m /= static_cast<double>(u.size());
    for (double& v : u) v -= m;
  }
  if (cfg.noise_rms) {
    if (!(*cfg.noise_rms >= 0.0)) {
      throw Error(ErrorCategory::kInvalidParameter,
                  "noise rms must be non-negative");
    }
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, *cfg.noise_rms);
    for (double& v : u) v += normal(rng);
  }
  if (cfg.clip_level) {
    const double c = *cfg.clip_level;
    if (!(c > 0.0)) {
      throw Error(ErrorCategory::kInvalidParameter,
                  "clip level must be positive");
    }
    for (double& v : u) v = std::clamp(v, -c, c);
  }
  return SampledSignal(std::move(u), displacement.sample_rate(), Unit::kVolts);
}

double spl_to_pressure_rms(double level_db_spl) {
  return kReferencePressurePa * std::pow(10.0, level_db_spl / 20.0);
}

double pressure_rms_to_spl(double pressure_rms) {
  return 20.0 * std::log10(pressure_rms / kReferencePressurePa);
}

double spl_to_pressure_peak(double level_db_spl) {
  return std::sqrt(2.0) * spl_to_pressure_rms(level_db_spl);
}

double displacement_amplitude(const MicParams& mic, double level_db_spl) {
  return mic.linear_sensitivity() * spl_to_pressure_peak(level_db_spl) /
         mic.k0();
}

double level_for_displacement(const MicParams& mic, double displacement_peak) {
  const double p_peak = displacement_peak * mic.k0() / mic.linear_sensitivity();
  return pressure_rms_to_spl(p_peak / std::sqrt(2.0));
}

double output_amplitude_to_spl(const MicParams& mic, double volts_peak) {
  return pressure_rms_to_spl(volts_peak / mic.linear_sensitivity() /
                             std::sqrt(2.0));
}

double peak_output_at_level(const MicParams& mic, int order,
                            double level_db_spl) {
  const double ym = displacement_amplitude(mic, level_db_spl);
  return std::max(std::abs(capsule_response(ym, mic.k0(), order)),
                  std::abs(capsule_response(-ym, mic.k0(), order)));
}

}  // namespace micdist
