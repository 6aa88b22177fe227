#include "micdist/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "micdist/csv.hpp"

namespace micdist {

double estimate_k0(const HarmonicReport& report) {
  if (report.n_harmonics < 2) {
    throw Error(ErrorCategory::kInvalidParameter,
                "K0 estimation needs the first two harmonics");
  }
  const double v1 = report.magnitude(1);
  const double v2 = report.magnitude(2);
  if (v1 == 0.0 || v2 == 0.0) {
    throw Error(ErrorCategory::kUndefinedK0,
                "zero harmonic amplitude: K0 estimate undefined");
  }
  return v1 * v1 / (2.0 * v2);
}

std::string_view reason_name(EstimateReason reason) {
  switch (reason) {
    case EstimateReason::kOk: return "ok";
    case EstimateReason::kV2BelowFloor: return "v2_below_floor";
    case EstimateReason::kClippingSuspected: return "clipping_suspected";
  }
  return "unknown";
}

double median(std::vector<double> values) {
  if (values.empty()) {
    throw Error(ErrorCategory::kInvalidInput, "median of empty sample");
  }
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

K0Estimate estimate_k0_sweep(std::span<const LevelReport> levels,
                             double gate_margin_db) {
  if (levels.empty()) {
    throw Error(ErrorCategory::kInvalidParameter, "empty level sweep");
  }
  const double gate_factor = std::pow(10.0, gate_margin_db / 20.0);
  const double proximity = std::pow(10.0, -kClippingProximityDb / 20.0);

  K0Estimate out;
  std::vector<double> valid;
  for (const LevelReport& level : levels) {
    const HarmonicReport& r = level.report;
    LevelEstimate e;
    e.level_db_spl = level.level_db_spl;
    const double v1 = r.n_harmonics >= 1 ? r.magnitude(1) : 0.0;
    const double v2 = r.n_harmonics >= 2 ? r.magnitude(2) : 0.0;
    const double gate = r.noise_floor * gate_factor;
    e.k0 = (v1 > 0.0 && v2 > 0.0) ? v1 * v1 / (2.0 * v2) : 0.0;

    if (v2 == 0.0 || v1 == 0.0 || v2 < gate) {
      e.reason = EstimateReason::kV2BelowFloor;
    } else if (r.n_harmonics >= 3 && r.magnitude(3) >= gate &&
               r.magnitude(3) >= v2 * proximity) {
      e.reason = EstimateReason::kClippingSuspected;
    } else {
      e.reason = EstimateReason::kOk;
      e.valid = true;
      valid.push_back(e.k0);
    }
    out.per_level.push_back(e);
  }

  if (valid.empty()) {
    std::string msg = "no valid level for K0 estimation:";
    for (const LevelEstimate& e : out.per_level) {
      msg += " " + format_number(e.level_db_spl) + " dB=" +
             std::string(reason_name(e.reason));
    }
    throw EstimationFailedError(msg, out.per_level);
  }
  out.aggregate = median(std::move(valid));
  return out;
}

void write_k0_estimate_csv(std::ostream& out, const K0Estimate& estimate) {
  out << "# level_db: dB SPL (RMS re 20 uPa); k0_volts: V; aggregate_k0_volts="
      << format_number(estimate.aggregate) << '\n';
  out << "level_db,k0_volts,valid,reason\n";
  for (const LevelEstimate& e : estimate.per_level) {
    out << format_number(e.level_db_spl) << ',' << format_number(e.k0) << ','
        << (e.valid ? 1 : 0) << ',' << reason_name(e.reason) << '\n';
  }
}

}  // namespace micdist
