#include "kickgen/dsp/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "kickgen/common/errors.hpp"

namespace kickgen::dsp {

AudioBuffer render_wav(const OnsetList& onsets, const AudioBuffer& sample,
                       double duration_s) {
  if (sample.samples.empty()) {
    throw std::invalid_argument("render: empty one-shot sample");
  }
  if (duration_s < 0.0) {
    throw std::invalid_argument("render: negative duration");
  }
  AudioBuffer out;
  out.sample_rate = sample.sample_rate;
  const auto total = static_cast<std::size_t>(
      std::llround(duration_s * sample.sample_rate));
  out.samples.assign(total, 0.0f);
  for (const auto& onset : onsets.onsets) {
    const auto start = static_cast<std::int64_t>(
        std::llround(onset.time_s * sample.sample_rate));
    for (std::size_t i = 0; i < sample.samples.size(); ++i) {
      const std::int64_t pos = start + static_cast<std::int64_t>(i);
      if (pos < 0 || pos >= static_cast<std::int64_t>(total)) continue;
      out.samples[static_cast<std::size_t>(pos)] +=
          static_cast<float>(onset.gain) * sample.samples[i];
    }
  }
  for (auto& s : out.samples) s = std::clamp(s, -1.0f, 1.0f);
  return out;
}

AudioBuffer synth_default_kick(int sample_rate) {
  constexpr double kDuration = 0.3;
  constexpr double kStartHz = 150.0;
  constexpr double kEndHz = 50.0;
  constexpr double kAmpDecay = 12.0;  // 1/s
  AudioBuffer kick;
  kick.sample_rate = sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(kDuration * sample_rate));
  kick.samples.resize(n);
  // f(t) = f0 * r^(t/D); phase is the closed-form integral of f
  const double ratio = kEndHz / kStartHz;
  const double log_ratio = std::log(ratio);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    const double phase = 2.0 * std::numbers::pi * kStartHz * kDuration /
                         log_ratio * (std::pow(ratio, t / kDuration) - 1.0);
    const double amp = 0.95 * std::exp(-kAmpDecay * t);
    kick.samples[i] = static_cast<float>(amp * std::sin(phase));
  }
  return kick;
}

namespace {

void put_u32(std::ofstream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
               static_cast<char>((v >> 16) & 0xFF),
               static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

void put_u16(std::ofstream& out, std::uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF)};
  out.write(b, 2);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

void write_wav(const std::string& path, const AudioBuffer& audio) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write wav: " + path);
  const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
  out.write("RIFF", 4);
  put_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate * 2));
  put_u16(out, 2);   // block align
  put_u16(out, 16);  // bits
  out.write("data", 4);
  put_u32(out, data_bytes);
  for (float s : audio.samples) {
    const auto v = static_cast<std::int16_t>(
        std::lround(std::clamp(s, -1.0f, 1.0f) * 32767.0f));
    const char b[2] = {static_cast<char>(v & 0xFF),
                       static_cast<char>((v >> 8) & 0xFF)};
    out.write(b, 2);
  }
  if (!out) throw IoError("write failed for wav: " + path);
}

AudioBuffer read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open wav: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("not a RIFF/WAVE file: " + path);
  }

  AudioBuffer audio;
  std::size_t pos = 12;
  bool have_fmt = false;
  while (pos + 8 <= bytes.size()) {
    const std::string id(reinterpret_cast<const char*>(bytes.data() + pos), 4);
    const std::uint32_t len = get_u32(bytes.data() + pos + 4);
    pos += 8;
    if (pos + len > bytes.size()) throw FormatError("truncated wav chunk: " + path);
    if (id == "fmt ") {
      if (len < 16) throw FormatError("bad fmt chunk: " + path);
      const auto format = get_u16(bytes.data() + pos);
      const auto channels = get_u16(bytes.data() + pos + 2);
      const auto rate = get_u32(bytes.data() + pos + 4);
      const auto bits = get_u16(bytes.data() + pos + 14);
      if (format != 1 || channels != 1 || bits != 16) {
        throw FormatError("wav must be 16-bit PCM mono: " + path);
      }
      audio.sample_rate = static_cast<int>(rate);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw FormatError("wav data before fmt: " + path);
      const std::size_t count = len / 2;
      audio.samples.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        const auto v = static_cast<std::int16_t>(
            get_u16(bytes.data() + pos + 2 * i));
        audio.samples[i] = static_cast<float>(v) / 32768.0f;
      }
      return audio;
    }
    pos += len + (len & 1);
  }
  throw FormatError("wav has no data chunk: " + path);
}

}  // namespace kickgen::dsp
