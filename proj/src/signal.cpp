#include "micdist/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "micdist/error.hpp"

namespace micdist {

std::string_view category_name(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kInvalidParameter: return "invalid_parameter";
    case ErrorCategory::kDomain: return "domain";
    case ErrorCategory::kUnit: return "unit";
    case ErrorCategory::kInvalidInput: return "invalid_input";
    case ErrorCategory::kUndefinedThd: return "undefined_thd";
    case ErrorCategory::kUndefinedK0: return "undefined_k0";
    case ErrorCategory::kCollision: return "collision";
    case ErrorCategory::kEstimationFailed: return "estimation_failed";
    case ErrorCategory::kMalformedHeader: return "malformed_header";
    case ErrorCategory::kUnsupportedCodec: return "unsupported_codec";
    case ErrorCategory::kChannelOutOfRange: return "channel_out_of_range";
    case ErrorCategory::kIo: return "io";
  }
  return "unknown";
}

std::string_view unit_name(Unit unit) {
  switch (unit) {
    case Unit::kVolts: return "V";
    case Unit::kPascals: return "Pa";
    case Unit::kDimensionless: return "1";
  }
  return "?";
}

SampledSignal::SampledSignal(std::vector<double> samples, double sample_rate,
                             Unit unit)
    : samples_(std::move(samples)), sample_rate_(sample_rate), unit_(unit) {
  if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_)) {
    throw Error(ErrorCategory::kInvalidParameter,
                "sample rate must be positive and finite");
  }
  auto bad = std::find_if(samples_.begin(), samples_.end(),
                          [](double x) { return !std::isfinite(x); });
  if (bad != samples_.end()) {
    throw Error(ErrorCategory::kInvalidInput,
                "non-finite sample at index " +
                    std::to_string(bad - samples_.begin()));
  }
}

SampledSignal SampledSignal::zeros(std::size_t length, double sample_rate,
                                   Unit unit) {
  return SampledSignal(std::vector<double>(length, 0.0), sample_rate, unit);
}

double SampledSignal::rms() const noexcept {
  if (samples_.empty()) return 0.0;
  double acc = 0.0;
  for (double x : samples_) acc += x * x;
  return std::sqrt(acc / static_cast<double>(samples_.size()));
}

double SampledSignal::peak() const noexcept {
  double p = 0.0;
  for (double x : samples_) p = std::max(p, std::abs(x));
  return p;
}

double SampledSignal::mean() const noexcept {
  if (samples_.empty()) return 0.0;
  return std::accumulate(samples_.begin(), samples_.end(), 0.0) /
         static_cast<double>(samples_.size());
}

void require_unit(const SampledSignal& signal, Unit expected) {
  if (signal.unit() != expected) {
    throw Error(ErrorCategory::kUnit,
                "expected unit " + std::string(unit_name(expected)) +
                    ", got " + std::string(unit_name(signal.unit())));
  }
}

SampledSignal remove_mean(const SampledSignal& signal) {
  const double m = signal.mean();
  std::vector<double> out(signal.samples().begin(), signal.samples().end());
  for (double& x : out) x -= m;
  return SampledSignal(std::move(out), signal.sample_rate(), signal.unit());
}

SampledSignal concatenate(std::span<const SampledSignal> parts) {
  if (parts.empty()) {
    throw Error(ErrorCategory::kInvalidInput, "nothing to concatenate");
  }
  std::vector<double> out;
  for (const auto& part : parts) {
    if (part.sample_rate() != parts.front().sample_rate() ||
        part.unit() != parts.front().unit()) {
      throw Error(ErrorCategory::kInvalidInput,
                  "cannot concatenate signals with different rate or unit");
    }
    out.insert(out.end(), part.samples().begin(), part.samples().end());
  }
  return SampledSignal(std::move(out), parts.front().sample_rate(),
                       parts.front().unit());
}

}  // namespace micdist
