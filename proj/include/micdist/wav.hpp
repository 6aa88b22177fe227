#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "micdist/signal.hpp"

namespace micdist {

enum class WavEncoding { kPcm16, kPcm24, kPcm32, kFloat32, kFloat64 };

struct WavInfo {
  int channels = 0;
  double sample_rate = 0.0;
  WavEncoding encoding = WavEncoding::kPcm16;
  std::size_t frames = 0;
};

// Parses a RIFF/WAVE image (PCM, IEEE float or WAVE_FORMAT_EXTENSIBLE with
// either subtype). Digital full scale (+-1.0) maps to +-volts_full_scale.
// Throws malformed-header, unsupported-codec or channel-out-of-range errors;
// nothing is returned on failure.
SampledSignal decode_wav(std::span<const std::uint8_t> bytes, int channel,
                         double volts_full_scale, WavInfo* info = nullptr);

SampledSignal read_wav(const std::filesystem::path& path, int channel,
                       double volts_full_scale, WavInfo* info = nullptr);

// Mono writer. Integer encodings round to nearest and saturate.
std::vector<std::uint8_t> encode_wav(const SampledSignal& signal,
                                     WavEncoding encoding,
                                     double volts_full_scale);

void write_wav(const std::filesystem::path& path, const SampledSignal& signal,
               WavEncoding encoding, double volts_full_scale);

}  // namespace micdist
