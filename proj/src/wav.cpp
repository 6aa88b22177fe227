#include "micdist/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "micdist/error.hpp"

namespace micdist {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCategory::kMalformedHeader, "malformed WAV: " + what);
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t u32(std::size_t at) const {
    need(at, 4);
    return static_cast<std::uint32_t>(bytes_[at]) |
           static_cast<std::uint32_t>(bytes_[at + 1]) << 8 |
           static_cast<std::uint32_t>(bytes_[at + 2]) << 16 |
           static_cast<std::uint32_t>(bytes_[at + 3]) << 24;
  }
  std::uint16_t u16(std::size_t at) const {
    need(at, 2);
    return static_cast<std::uint16_t>(bytes_[at] | bytes_[at + 1] << 8);
  }
  bool tag(std::size_t at, const char (&id)[5]) const {
    need(at, 4);
    return std::memcmp(bytes_.data() + at, id, 4) == 0;
  }
  void need(std::size_t at, std::size_t n) const {
    if (at > bytes_.size() || bytes_.size() - at < n) malformed("truncated");
  }
  const std::uint8_t* at(std::size_t offset) const {
    return bytes_.data() + offset;
  }
  std::size_t size() const { return bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
};

double read_sample(const std::uint8_t* p, WavEncoding enc) {
  switch (enc) {
    case WavEncoding::kPcm16: {
      const auto v = static_cast<std::int16_t>(p[0] | p[1] << 8);
      return v / 32768.0;
    }
    case WavEncoding::kPcm24: {
      std::int32_t v = p[0] | p[1] << 8 | p[2] << 16;
      if (v & 0x800000) v -= 0x1000000;
      return v / 8388608.0;
    }
    case WavEncoding::kPcm32: {
      const auto v = static_cast<std::int32_t>(
          static_cast<std::uint32_t>(p[0]) |
          static_cast<std::uint32_t>(p[1]) << 8 |
          static_cast<std::uint32_t>(p[2]) << 16 |
          static_cast<std::uint32_t>(p[3]) << 24);
      return v / 2147483648.0;
    }
    case WavEncoding::kFloat32: {
      std::uint32_t bits = 0;
      for (int i = 3; i >= 0; --i) bits = bits << 8 | p[i];
      return static_cast<double>(std::bit_cast<float>(bits));
    }
    case WavEncoding::kFloat64: {
      std::uint64_t bits = 0;
      for (int i = 7; i >= 0; --i) bits = bits << 8 | p[i];
      return std::bit_cast<double>(bits);
    }
  }
  return 0.0;
}

int bytes_per_sample(WavEncoding enc) {
  switch (enc) {
    case WavEncoding::kPcm16: return 2;
    case WavEncoding::kPcm24: return 3;
    case WavEncoding::kPcm32: return 4;
    case WavEncoding::kFloat32: return 4;
    case WavEncoding::kFloat64: return 8;
  }
  return 0;
}

WavEncoding encoding_for(std::uint16_t format, std::uint16_t bits) {
  if (format == kFormatPcm) {
    if (bits == 16) return WavEncoding::kPcm16;
    if (bits == 24) return WavEncoding::kPcm24;
    if (bits == 32) return WavEncoding::kPcm32;
  } else if (format == kFormatFloat) {
    if (bits == 32) return WavEncoding::kFloat32;
    if (bits == 64) return WavEncoding::kFloat64;
  }
  throw Error(ErrorCategory::kUnsupportedCodec,
              "unsupported WAV codec: format tag " + std::to_string(format) +
                  ", " + std::to_string(bits) + " bits");
}

void put(std::vector<std::uint8_t>& out, std::uint64_t v, int n) {
  for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_tag(std::vector<std::uint8_t>& out, const char (&id)[5]) {
  out.insert(out.end(), id, id + 4);
}

}  // namespace

SampledSignal decode_wav(std::span<const std::uint8_t> bytes, int channel,
                         double volts_full_scale, WavInfo* info) {
  if (!(volts_full_scale > 0.0)) {
    throw Error(ErrorCategory::kInvalidParameter,
                "full-scale calibration must be positive");
  }
  Reader r(bytes);
  if (r.size() < 12 || !r.tag(0, "RIFF") || !r.tag(8, "WAVE")) {
    malformed("missing RIFF/WAVE header");
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  std::size_t data_at = 0, data_size = 0;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= r.size()) {
    const std::uint32_t size = r.u32(pos + 4);
    const std::size_t body = pos + 8;
    r.need(body, size);
    if (r.tag(pos, "fmt ")) {
      if (size < 16) malformed("fmt chunk too short");
      format = r.u16(body);
      channels = r.u16(body + 2);
      rate = r.u32(body + 4);
      block_align = r.u16(body + 12);
      bits = r.u16(body + 14);
      if (format == kFormatExtensible) {
        if (size < 40) malformed("extensible fmt chunk too short");
        format = r.u16(body + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (r.tag(pos, "data")) {
      data_at = body;
      data_size = size;
      have_data = true;
      break;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) malformed("no fmt chunk");
  if (!have_data) malformed("no data chunk");
  if (channels == 0 || rate == 0) malformed("zero channels or sample rate");

  const WavEncoding enc = encoding_for(format, bits);
  const int width = bytes_per_sample(enc);
  if (block_align != channels * width) malformed("inconsistent block align");
  if (data_size % block_align != 0) malformed("partial sample frame");
  if (channel < 0 || channel >= channels) {
    throw Error(ErrorCategory::kChannelOutOfRange,
                "channel " + std::to_string(channel) + " out of range (file has " +
                    std::to_string(channels) + ")");
  }

  const std::size_t frames = data_size / block_align;
  std::vector<double> samples(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    samples[i] = volts_full_scale *
                 read_sample(r.at(data_at + i * block_align +
                                  static_cast<std::size_t>(channel * width)),
                             enc);
  }
  if (info) *info = {channels, static_cast<double>(rate), enc, frames};
  return SampledSignal(std::move(samples), rate, Unit::kVolts);
}

SampledSignal read_wav(const std::filesystem::path& path, int channel,
                       double volts_full_scale, WavInfo* info) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCategory::kIo, "cannot open " + path.string());
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_wav(bytes, channel, volts_full_scale, info);
}

std::vector<std::uint8_t> encode_wav(const SampledSignal& signal,
                                     WavEncoding encoding,
                                     double volts_full_scale) {
  if (!(volts_full_scale > 0.0)) {
    throw Error(ErrorCategory::kInvalidParameter,
                "full-scale calibration must be positive");
  }
  const double rate = signal.sample_rate();
  if (rate != std::floor(rate) || rate > 4294967295.0) {
    throw Error(ErrorCategory::kInvalidParameter,
                "WAV needs an integral sample rate");
  }
  const int width = bytes_per_sample(encoding);
  const bool is_float =
      encoding == WavEncoding::kFloat32 || encoding == WavEncoding::kFloat64;
  const std::uint64_t data_size = signal.size() * static_cast<std::uint64_t>(width);
  if (data_size > 0xFFFFFFFFull - 64) {
    throw Error(ErrorCategory::kInvalidParameter, "signal too long for WAV");
  }

  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(data_size) + 44);
  put_tag(out, "RIFF");
  put(out, 36 + data_size, 4);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put(out, 16, 4);
  put(out, is_float ? kFormatFloat : kFormatPcm, 2);
  put(out, 1, 2);
  put(out, static_cast<std::uint64_t>(rate), 4);
  put(out, static_cast<std::uint64_t>(rate) * width, 4);
  put(out, static_cast<std::uint64_t>(width), 2);
  put(out, static_cast<std::uint64_t>(width) * 8, 2);
  put_tag(out, "data");
  put(out, data_size, 4);

  for (double v : signal.samples()) {
    const double x = v / volts_full_scale;
    switch (encoding) {
      case WavEncoding::kFloat64:
        put(out, std::bit_cast<std::uint64_t>(x), 8);
        break;
      case WavEncoding::kFloat32:
        put(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)), 4);
        break;
      default: {
        const double scale = std::ldexp(1.0, width * 8 - 1);
        const double q = std::clamp(std::round(x * scale), -scale, scale - 1.0);
        put(out, static_cast<std::uint64_t>(static_cast<std::int64_t>(q)), width);
      }
    }
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const SampledSignal& signal,
               WavEncoding encoding, double volts_full_scale) {
  const auto bytes = encode_wav(signal, encoding, volts_full_scale);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCategory::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCategory::kIo, "write failed: " + path.string());
}

}  // namespace micdist
