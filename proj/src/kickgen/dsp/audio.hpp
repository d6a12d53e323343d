#pragma once

#include <string>
#include <vector>

#include "kickgen/dsp/peaks.hpp"

namespace kickgen::dsp {

/// Mono audio in [-1, 1].
struct AudioBuffer {
  std::vector<float> samples;
  int sample_rate = 44100;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

/// Mixes gain-scaled copies of the one-shot sample at each onset time
/// (nearest-sample alignment); overlapping tails sum; output is clipped to
/// [-1, 1].
AudioBuffer render_wav(const OnsetList& onsets, const AudioBuffer& sample,
                       double duration_s);

/// Deterministic 0.3 s synthetic kick: sine with an exponential pitch glide
/// 150 -> 50 Hz and exponential amplitude decay.
AudioBuffer synth_default_kick(int sample_rate = 44100);

/// 16-bit PCM mono RIFF.
void write_wav(const std::string& path, const AudioBuffer& audio);
AudioBuffer read_wav(const std::string& path);

}  // namespace kickgen::dsp
