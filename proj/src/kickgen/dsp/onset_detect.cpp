#include "kickgen/dsp/onset_detect.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kickgen::dsp {

void fft_radix2(std::vector<std::complex<double>>& data) {
  const std::size_t n = data.size();
  if (n == 0 || (n & (n - 1)) != 0) {
    throw std::invalid_argument("fft: size must be a power of two");
  }
  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = data[i + k];
        const auto v = data[i + k + len / 2] * w;
        data[i + k] = u + v;
        data[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

signal::OnsetCurve complex_domain_onsets(const AudioBuffer& audio,
                                         bool standardized) {
  const std::size_t n = audio.samples.size();
  const auto block = static_cast<std::size_t>(kStftBlock);
  const auto hop = static_cast<std::size_t>(kStftHop);
  if (n < 2 * block) {
    throw std::invalid_argument(
        "onset detection: audio shorter than two blocks");
  }
  const std::size_t frames = (n - block) / hop + 1;
  const std::size_t bins = block / 2 + 1;

  std::vector<double> window(block);
  for (std::size_t i = 0; i < block; ++i) {
    window[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi *
                                      static_cast<double>(i) / block));
  }

  // rolling magnitude/phase of the previous two frames
  std::vector<double> mag_prev(bins, 0.0), mag_prev2(bins, 0.0);
  std::vector<double> ph_prev(bins, 0.0), ph_prev2(bins, 0.0);

  signal::OnsetCurve out;
  out.frame_rate = static_cast<double>(audio.sample_rate) / kStftHop;
  out.values.assign(frames, 0.0);

  std::vector<std::complex<double>> buf(block);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t start = f * hop;
    for (std::size_t i = 0; i < block; ++i) {
      buf[i] = {window[i] * static_cast<double>(audio.samples[start + i]), 0.0};
    }
    fft_radix2(buf);

    double cd = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      const double mag = std::abs(buf[k]);
      const double phase = std::arg(buf[k]);
      if (f >= 2) {
        const double predicted_phase = 2.0 * ph_prev[k] - ph_prev2[k];
        const std::complex<double> predicted =
            std::polar(mag_prev[k], predicted_phase);
        cd += std::abs(buf[k] - predicted);
      }
      mag_prev2[k] = mag_prev[k];
      mag_prev[k] = mag;
      ph_prev2[k] = ph_prev[k];
      ph_prev[k] = phase;
    }
    if (f >= 2) out.values[f] = cd;
  }

  if (!standardized) return out;
  return signal::standardize(out);
}

}  // namespace kickgen::dsp
