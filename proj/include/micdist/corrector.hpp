#pragma once

#include <cstddef>
#include <span>

#include "micdist/signal.hpp"

namespace micdist {

// Post-processing that linearizes a single-backplate condenser capsule.
// The capsule output to second order is u = u_lin - u_lin^2 / K0; the
// corrector inverts that map sample by sample. K0 is the only parameter.

enum class CorrectionMethod {
  kExactSqrt,        // u_lin = (K0/2) (1 - sqrt(1 - 4u/K0))
  kQuadraticApprox,  // u_lin = u + u^2 / K0
};

enum class ClampPolicy {
  kClampToVertex,  // negative radicand treated as 0 and counted
  kErrorOut,       // negative radicand raises DomainError
};

struct CorrectionConfig {
  double k0 = 0.0;
  CorrectionMethod method = CorrectionMethod::kQuadraticApprox;
  ClampPolicy clamp_policy = ClampPolicy::kClampToVertex;
};

struct CorrectionStats {
  std::size_t samples_processed = 0;
  std::size_t domain_clamps = 0;  // samples with 1 - 4u/K0 < 0

  CorrectionStats& operator+=(const CorrectionStats& other) noexcept {
    samples_processed += other.samples_processed;
    domain_clamps += other.domain_clamps;
    return *this;
  }
  friend CorrectionStats operator+(CorrectionStats a,
                                   const CorrectionStats& b) noexcept {
    return a += b;
  }
  friend bool operator==(const CorrectionStats&,
                         const CorrectionStats&) = default;
};

struct CorrectionResult {
  SampledSignal signal;
  CorrectionStats stats;
};

// Single-sample maps. The exact form is evaluated as 2u / (1 + sqrt(r)),
// which equals (K0/2)(1 - sqrt(r)) but keeps full relative precision for
// small u. `clamped` is set when the radicand r = 1 - 4u/K0 was negative.
double correct_sample_exact(double u, double k0, bool& clamped) noexcept;
inline double correct_sample_approx(double u, double k0) noexcept {
  return u + u * u / k0;
}

// In-place block processing; `offset` is the index of block[0] in the
// overall stream and only affects error messages.
CorrectionStats correct_in_place(std::span<double> block,
                                 const CorrectionConfig& cfg,
                                 std::size_t offset = 0);

// Both require a volts signal and k0 > 0, and cfg.method must match.
CorrectionResult correct_exact(const SampledSignal& u,
                               const CorrectionConfig& cfg);
CorrectionResult correct_approx(const SampledSignal& u,
                                const CorrectionConfig& cfg);

// Dispatches on cfg.method.
CorrectionResult correct(const SampledSignal& u, const CorrectionConfig& cfg);

// Chunked form. Output equals whole-signal correction of the concatenated
// chunks bit for bit; stats, when requested, are accumulated.
SampledSignal correct_stream(const SampledSignal& chunk,
                             const CorrectionConfig& cfg);
SampledSignal correct_stream(const SampledSignal& chunk,
                             const CorrectionConfig& cfg,
                             CorrectionStats& accumulated);

}  // namespace micdist
