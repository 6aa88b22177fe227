#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "micdist/error.hpp"
#include "micdist/spectral.hpp"

namespace micdist {

// K0 = V1^2 / (2 V2) from harmonic magnitudes of a sine response. Throws
// undefined-K0 when V2 (or V1) is zero.
double estimate_k0(const HarmonicReport& report);

enum class EstimateReason { kOk, kV2BelowFloor, kClippingSuspected };

std::string_view reason_name(EstimateReason reason);

struct LevelEstimate {
  double level_db_spl = 0.0;
  double k0 = 0.0;  // computed even when gated out, 0 if undefined
  bool valid = false;
  EstimateReason reason = EstimateReason::kOk;
};

struct K0Estimate {
  std::vector<LevelEstimate> per_level;
  double aggregate = 0.0;  // median over valid entries
};

struct LevelReport {
  double level_db_spl = 0.0;
  HarmonicReport report;
};

inline constexpr double kDefaultGateMarginDb = 10.0;
// V3 within this many dB of V2 marks a level as clipped.
inline constexpr double kClippingProximityDb = 10.0;

class EstimationFailedError : public Error {
 public:
  EstimationFailedError(const std::string& message,
                        std::vector<LevelEstimate> per_level)
      : Error(ErrorCategory::kEstimationFailed, message),
        per_level_(std::move(per_level)) {}

  const std::vector<LevelEstimate>& per_level() const noexcept {
    return per_level_;
  }

 private:
  std::vector<LevelEstimate> per_level_;
};

// Per-level estimates with validity gating:
//  - v2_below_floor when |V2| < noise_floor * 10^(margin/20);
//  - clipping_suspected when |V3| also clears that gate and lies within
//    kClippingProximityDb of |V2| (odd-order growth the quadratic model
//    cannot produce).
// Entries keep the input order. Throws EstimationFailedError when no level
// is valid and invalid-parameter on an empty sweep.
K0Estimate estimate_k0_sweep(std::span<const LevelReport> levels,
                             double gate_margin_db = kDefaultGateMarginDb);

// Median of a non-empty sample (mean of the middle pair for even sizes).
double median(std::vector<double> values);

// Columns level_db, k0_volts, valid, reason.
void write_k0_estimate_csv(std::ostream& out, const K0Estimate& estimate);

}  // namespace micdist
