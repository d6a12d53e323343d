#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kickgen/signal/corpus.hpp"
#include "kickgen/signal/onset_curve.hpp"

namespace kickgen::signal {

/// On-disk song format: a directory holding `meta.json` (format tag, id,
/// tempo, frame rate, frame count, channel order, optional onset times) and
/// `channels.f32` (raw little-endian f32, channel-major, order
/// [kick, snare, bass, beat, downbeat], each exactly T samples).
void save_song(const std::string& dir, const SongRecord& song);
SongRecord load_song(const std::string& dir);

/// A corpus directory holds one subdirectory per song plus a
/// `corpus.json` manifest recording the generator config and seed, which
/// lets experiments re-render songs at other tempos.
struct CorpusManifest {
  CorpusConfig config;
  std::uint64_t seed = 0;
};

void save_corpus(const std::string& dir, const std::vector<SongRecord>& songs,
                 const std::optional<CorpusManifest>& manifest);
std::vector<SongRecord> load_corpus(const std::string& dir);
std::optional<CorpusManifest> load_corpus_manifest(const std::string& dir);

}  // namespace kickgen::signal
