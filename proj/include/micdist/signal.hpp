#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace micdist {

enum class Unit { kVolts, kPascals, kDimensionless };

std::string_view unit_name(Unit unit);

// Uniformly sampled real waveform. Construction validates that the sample
// rate is positive and every sample is finite.
class SampledSignal {
 public:
  SampledSignal(std::vector<double> samples, double sample_rate, Unit unit);

  static SampledSignal zeros(std::size_t length, double sample_rate,
                             Unit unit);

  std::span<const double> samples() const noexcept { return samples_; }
  double operator[](std::size_t i) const noexcept { return samples_[i]; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  double sample_rate() const noexcept { return sample_rate_; }
  Unit unit() const noexcept { return unit_; }

  // Moves the sample buffer out; the signal is left empty.
  std::vector<double> release() && { return std::move(samples_); }

  double rms() const noexcept;
  double peak() const noexcept;
  double mean() const noexcept;

  friend bool operator==(const SampledSignal&, const SampledSignal&) = default;

 private:
  std::vector<double> samples_;
  double sample_rate_;
  Unit unit_;
};

// Throws a unit error when `signal` does not carry `expected`.
void require_unit(const SampledSignal& signal, Unit expected);

// Subtracts the frame mean; models an AC-coupled output.
SampledSignal remove_mean(const SampledSignal& signal);

// Concatenates signals of equal rate and unit.
SampledSignal concatenate(std::span<const SampledSignal> parts);

}  // namespace micdist
