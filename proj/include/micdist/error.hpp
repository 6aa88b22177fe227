#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace micdist {

enum class ErrorCategory {
  kInvalidParameter,
  kDomain,
  kUnit,
  kInvalidInput,
  kUndefinedThd,
  kUndefinedK0,
  kCollision,
  kEstimationFailed,
  kMalformedHeader,
  kUnsupportedCodec,
  kChannelOutOfRange,
  kIo,
};

// Stable machine-readable name, used on stderr by the CLI.
std::string_view category_name(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

// Raised when a sample leaves the valid region of a map (series divergence,
// negative radicand). `sample_index` is the first offending sample if known.
class DomainError : public Error {
 public:
  DomainError(const std::string& message,
              std::optional<std::size_t> sample_index = std::nullopt)
      : Error(ErrorCategory::kDomain, message), sample_index_(sample_index) {}

  std::optional<std::size_t> sample_index() const noexcept {
    return sample_index_;
  }

 private:
  std::optional<std::size_t> sample_index_;
};

class CollisionError : public Error {
 public:
  CollisionError(const std::string& message, std::vector<int> bins)
      : Error(ErrorCategory::kCollision, message), bins_(std::move(bins)) {}

  const std::vector<int>& bins() const noexcept { return bins_; }

 private:
  std::vector<int> bins_;
};

}  // namespace micdist
