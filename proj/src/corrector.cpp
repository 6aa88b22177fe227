#include "micdist/corrector.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "micdist/error.hpp"

namespace micdist {

namespace {

void validate(const CorrectionConfig& cfg) {
  if (!(cfg.k0 > 0.0) || !std::isfinite(cfg.k0)) {
    throw Error(ErrorCategory::kInvalidParameter, "K0 must be positive");
  }
}

void require_method(const CorrectionConfig& cfg, CorrectionMethod expected) {
  if (cfg.method != expected) {
    throw Error(ErrorCategory::kInvalidParameter,
                "correction method does not match the requested operation");
  }
}

}  // namespace

double correct_sample_exact(double u, double k0, bool& clamped) noexcept {
  double radicand = 1.0 - 4.0 * u / k0;
  clamped = radicand < 0.0;
  if (clamped) radicand = 0.0;
  return 2.0 * u / (1.0 + std::sqrt(radicand));
}

CorrectionStats correct_in_place(std::span<double> block,
                                 const CorrectionConfig& cfg,
                                 std::size_t offset) {
  validate(cfg);
  CorrectionStats stats;
  const double k0 = cfg.k0;
  if (cfg.method == CorrectionMethod::kQuadraticApprox) {
    for (double& v : block) v = correct_sample_approx(v, k0);
    stats.samples_processed = block.size();
    return stats;
  }

  if (cfg.clamp_policy == ClampPolicy::kErrorOut) {
    // Scan first so a failing block is left untouched.
    for (std::size_t i = 0; i < block.size(); ++i) {
      if (1.0 - 4.0 * block[i] / k0 < 0.0) {
        throw DomainError("negative radicand 1 - 4u/K0 at sample " +
                              std::to_string(offset + i),
                          offset + i);
      }
    }
  }
  for (double& v : block) {
    bool clamped = false;
    v = correct_sample_exact(v, k0, clamped);
    if (clamped) ++stats.domain_clamps;
  }
  stats.samples_processed = block.size();
  return stats;
}

namespace {

CorrectionResult run(const SampledSignal& u, const CorrectionConfig& cfg) {
  require_unit(u, Unit::kVolts);
  std::vector<double> out(u.samples().begin(), u.samples().end());
  const CorrectionStats stats = correct_in_place(out, cfg);
  return {SampledSignal(std::move(out), u.sample_rate(), Unit::kVolts), stats};
}

}  // namespace

CorrectionResult correct_exact(const SampledSignal& u,
                               const CorrectionConfig& cfg) {
  validate(cfg);
  require_method(cfg, CorrectionMethod::kExactSqrt);
  return run(u, cfg);
}

CorrectionResult correct_approx(const SampledSignal& u,
                                const CorrectionConfig& cfg) {
  validate(cfg);
  require_method(cfg, CorrectionMethod::kQuadraticApprox);
  return run(u, cfg);
}

CorrectionResult correct(const SampledSignal& u, const CorrectionConfig& cfg) {
  return cfg.method == CorrectionMethod::kExactSqrt ? correct_exact(u, cfg)
                                                    : correct_approx(u, cfg);
}

SampledSignal correct_stream(const SampledSignal& chunk,
                             const CorrectionConfig& cfg) {
  return correct(chunk, cfg).signal;
}

SampledSignal correct_stream(const SampledSignal& chunk,
                             const CorrectionConfig& cfg,
                             CorrectionStats& accumulated) {
  auto result = correct(chunk, cfg);
  accumulated += result.stats;
  return std::move(result.signal);
}

}  // namespace micdist
