#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kickgen/signal/onset_curve.hpp"

namespace kickgen::signal {

/// One rhythmic relation: fixed 16th-note-grid patterns for the context
/// instruments and the kick rule that goes with them. Context patterns are
/// shared between styles so the kick is not determined by context alone.
struct StyleTemplate {
  std::string name;
  std::vector<int> snare;  // active 16th steps within a bar (0..15)
  std::vector<int> bass;
  std::vector<int> kick;
};

const std::vector<StyleTemplate>& builtin_styles();
std::vector<std::string> builtin_style_names();

struct CorpusConfig {
  int n_songs = 16;
  int bars = 12;
  double tempo_min = 90.0;
  double tempo_max = 150.0;
  double frame_rate = kDefaultFrameRate;
  std::vector<std::string> styles = builtin_style_names();
  double noise_sigma = 0.05;
  int decay_frames = 6;

  void validate() const;
};

/// Deterministic per-song generation plan.
struct SongSpec {
  int index = 0;
  int style = 0;  // index into the configured style list
  double tempo_bpm = 120.0;
};

/// Draws the per-song plans for (config, seed); bit-deterministic.
std::vector<SongSpec> corpus_specs(const CorpusConfig& config,
                                   std::uint64_t seed);

/// Renders one song from its plan: unit impulses on the 16th grid convolved
/// with a short exponential decay, Gaussian noise on the instrument
/// channels, smoothed impulse trains for beat/downbeat, all standardized.
/// Values are quantized to f32 so the on-disk round trip is exact.
/// The noise stream depends only on (seed, spec.index), so re-rendering the
/// same song at a different tempo keeps everything else fixed.
SongRecord render_song(const CorpusConfig& config, const SongSpec& spec,
                       std::uint64_t seed);

std::vector<SongRecord> generate_corpus(const CorpusConfig& config,
                                        std::uint64_t seed);

}  // namespace kickgen::signal
