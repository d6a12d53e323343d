#include "kickgen/signal/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kickgen/common/rng.hpp"

namespace kickgen::signal {

namespace {

constexpr int kStepsPerBar = 16;  // 16th notes, 4/4

std::vector<double> impulse_train(const std::vector<int>& steps, int bars,
                                  double step_dur_s, double frame_rate,
                                  std::size_t frames) {
  std::vector<double> curve(frames, 0.0);
  for (int bar = 0; bar < bars; ++bar) {
    for (int s : steps) {
      const double t = (static_cast<double>(bar) * kStepsPerBar + s) * step_dur_s;
      const auto frame = static_cast<std::int64_t>(std::llround(t * frame_rate));
      if (frame >= 0 && frame < static_cast<std::int64_t>(frames)) {
        curve[static_cast<std::size_t>(frame)] += 1.0;
      }
    }
  }
  return curve;
}

void convolve_decay(std::vector<double>& curve, int decay_frames) {
  // h[k] = exp(-k/2), k = 0..decay_frames-1; applied in place back to front
  std::vector<double> kernel(static_cast<std::size_t>(decay_frames));
  for (int k = 0; k < decay_frames; ++k) {
    kernel[static_cast<std::size_t>(k)] = std::exp(-static_cast<double>(k) / 2.0);
  }
  const std::size_t n = curve.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double acc = 0.0;
    for (int k = 0; k < decay_frames && static_cast<std::size_t>(k) <= t; ++k) {
      acc += kernel[static_cast<std::size_t>(k)] * curve[t - static_cast<std::size_t>(k)];
    }
    out[t] = acc;
  }
  curve = std::move(out);
}

void quantize_f32(std::vector<double>& v) {
  for (double& x : v) x = static_cast<double>(static_cast<float>(x));
}

OnsetCurve finish_channel(std::vector<double> values, double frame_rate) {
  OnsetCurve c;
  c.frame_rate = frame_rate;
  c.values = std::move(values);
  c = standardize(c);
  quantize_f32(c.values);
  return c;
}

}  // namespace

const std::vector<StyleTemplate>& builtin_styles() {
  // Four context classes, two kick rules each: the same (snare, bass)
  // pattern admits different kicks, so the mapping code has to carry the
  // choice.
  static const std::vector<StyleTemplate> styles = {
      {"four_on_floor", {4, 12}, {0, 2, 4, 6, 8, 10, 12, 14}, {0, 4, 8, 12}},
      {"offbeat", {4, 12}, {0, 2, 4, 6, 8, 10, 12, 14}, {2, 6, 10, 14}},
      {"steady_push", {4, 12}, {0, 3, 6, 10, 14}, {0, 4, 8, 12}},
      {"syncopated", {4, 12}, {0, 3, 6, 10, 14}, {0, 6, 10}},
      {"halftime", {2, 6, 10, 14}, {0, 4, 8, 12}, {0, 8}},
      {"broken", {2, 6, 10, 14}, {0, 4, 8, 12}, {0, 3, 8, 11}},
      {"sparse", {4, 10, 12}, {0, 5, 8, 13}, {0, 10}},
      {"driving", {4, 10, 12}, {0, 5, 8, 13}, {0, 4, 8, 12}},
  };
  return styles;
}

std::vector<std::string> builtin_style_names() {
  std::vector<std::string> names;
  for (const auto& s : builtin_styles()) names.push_back(s.name);
  return names;
}

void CorpusConfig::validate() const {
  if (n_songs < 1) throw std::invalid_argument("corpus: n_songs must be >= 1");
  if (bars < 1) throw std::invalid_argument("corpus: bars must be >= 1");
  if (!(tempo_min > 0.0) || tempo_max < tempo_min) {
    throw std::invalid_argument("corpus: invalid tempo range");
  }
  if (!(frame_rate > 0.0)) {
    throw std::invalid_argument("corpus: frame_rate must be positive");
  }
  if (styles.empty()) throw std::invalid_argument("corpus: empty style set");
  for (const auto& name : styles) {
    const auto& all = builtin_styles();
    if (std::none_of(all.begin(), all.end(),
                     [&](const StyleTemplate& s) { return s.name == name; })) {
      throw std::invalid_argument("corpus: unknown style: " + name);
    }
  }
  if (noise_sigma < 0.0) {
    throw std::invalid_argument("corpus: noise_sigma must be >= 0");
  }
  if (decay_frames < 1) {
    throw std::invalid_argument("corpus: decay_frames must be >= 1");
  }
}

std::vector<SongSpec> corpus_specs(const CorpusConfig& config,
                                   std::uint64_t seed) {
  config.validate();
  std::vector<SongSpec> specs;
  specs.reserve(static_cast<std::size_t>(config.n_songs));
  for (int i = 0; i < config.n_songs; ++i) {
    Rng rng = Rng::substream(seed, Stream::kCorpus,
                             {static_cast<std::uint64_t>(i), 0});
    SongSpec spec;
    spec.index = i;
    spec.style = static_cast<int>(
        rng.uniform_int(0, static_cast<std::int64_t>(config.styles.size()) - 1));
    spec.tempo_bpm = rng.uniform(config.tempo_min, config.tempo_max);
    specs.push_back(spec);
  }
  return specs;
}

SongRecord render_song(const CorpusConfig& config, const SongSpec& spec,
                       std::uint64_t seed) {
  config.validate();
  const std::string& style_name =
      config.styles.at(static_cast<std::size_t>(spec.style));
  const auto& all = builtin_styles();
  const auto it = std::find_if(
      all.begin(), all.end(),
      [&](const StyleTemplate& s) { return s.name == style_name; });
  const StyleTemplate& style = *it;

  const double beat_dur = 60.0 / spec.tempo_bpm;
  const double step_dur = beat_dur / 4.0;
  const double total_s = config.bars * 4.0 * beat_dur;
  const auto frames = static_cast<std::size_t>(
      std::llround(total_s * config.frame_rate));

  Rng noise = Rng::substream(seed, Stream::kCorpus,
                             {static_cast<std::uint64_t>(spec.index), 1});
  const auto render_instrument = [&](const std::vector<int>& steps) {
    auto curve = impulse_train(steps, config.bars, step_dur, config.frame_rate,
                               frames);
    convolve_decay(curve, config.decay_frames);
    for (double& v : curve) v += config.noise_sigma * noise.normal();
    return finish_channel(std::move(curve), config.frame_rate);
  };
  const auto render_clock = [&](const std::vector<int>& steps) {
    auto curve = impulse_train(steps, config.bars, step_dur, config.frame_rate,
                               frames);
    convolve_decay(curve, config.decay_frames);
    return finish_channel(std::move(curve), config.frame_rate);
  };

  SongRecord song;
  song.id = "s" + std::to_string(spec.index / 100) +
            std::to_string((spec.index / 10) % 10) +
            std::to_string(spec.index % 10) + "-" + style.name;
  song.tempo_bpm = spec.tempo_bpm;
  song.target = render_instrument(style.kick);
  song.context.channels[0] = render_instrument(style.snare);
  song.context.channels[1] = render_instrument(style.bass);
  song.context.channels[2] = render_clock({0, 4, 8, 12});  // beats
  song.context.channels[3] = render_clock({0});            // downbeats

  for (int bar = 0; bar < config.bars; ++bar) {
    for (int s : style.kick) {
      const double t = (static_cast<double>(bar) * kStepsPerBar + s) * step_dur;
      if (std::llround(t * config.frame_rate) <
          static_cast<std::int64_t>(frames)) {
        song.onset_times.push_back(t);
      }
    }
  }
  song.validate();
  return song;
}

std::vector<SongRecord> generate_corpus(const CorpusConfig& config,
                                        std::uint64_t seed) {
  const auto specs = corpus_specs(config, seed);
  std::vector<SongRecord> songs;
  songs.reserve(specs.size());
  for (const auto& spec : specs) {
    songs.push_back(render_song(config, spec, seed));
  }
  return songs;
}

}  // namespace kickgen::signal
