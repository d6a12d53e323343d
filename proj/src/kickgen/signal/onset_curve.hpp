#pragma once

#include <array>
#include <string>
#include <vector>

namespace kickgen::signal {

/// A length-T sequence of onset-strength samples at a fixed frame rate.
struct OnsetCurve {
  std::vector<double> values;
  double frame_rate = 0.0;  // frames per second

  std::size_t length() const { return values.size(); }
  double duration_s() const {
    return static_cast<double>(values.size()) / frame_rate;
  }
};

/// Default analysis frame rate: 44100 Hz audio, 512-sample hop.
inline constexpr double kDefaultFrameRate = 44100.0 / 512.0;

inline constexpr int kContextChannels = 4;
inline constexpr std::array<const char*, 5> kChannelOrder = {
    "kick", "snare", "bass", "beat", "downbeat"};

/// The four context channels in fixed order [snare, bass, beat, downbeat],
/// equal length and frame rate.
struct ContextBundle {
  std::array<OnsetCurve, kContextChannels> channels;

  std::size_t length() const { return channels[0].length(); }
  double frame_rate() const { return channels[0].frame_rate; }
  void validate() const;
};

/// One (context, target) pair: a song.
struct SongRecord {
  std::string id;
  double tempo_bpm = 0.0;
  ContextBundle context;
  OnsetCurve target;                  // kick
  std::vector<double> onset_times;    // ground-truth kick onsets (seconds),
                                      // present for synthetic songs

  std::size_t length() const { return target.length(); }
  void validate() const;
};

/// One draw of the time-warp augmentation: an integer frame shift in
/// [-150, 150] and a resampling factor in [0.8, 1.2].
struct AugmentationParams {
  int shift = 0;
  double scale = 1.0;

  void validate() const;
};

inline constexpr int kMaxShiftFrames = 150;
inline constexpr double kMinScale = 0.8;
inline constexpr double kMaxScale = 1.2;

/// Zero mean, unit population variance (divide by T). Throws
/// std::invalid_argument on constant ("zero variance"), too-short, or
/// non-finite input.
OnsetCurve standardize(const OnsetCurve& curve);

/// Resamples by `scale` via linear interpolation onto the original frame
/// grid (output index t reads input position scale*t; tail zero-filled),
/// then delays by `shift` frames (vacated positions zero-filled). Output
/// length equals input length.
OnsetCurve apply_time_warp(const OnsetCurve& curve,
                           const AugmentationParams& params);

/// Scale-then-shift warp on a raw value sequence; shared by curve and
/// tensor paths so both use identical semantics.
std::vector<double> warp_values(const std::vector<double>& in, int shift,
                                double scale);

}  // namespace kickgen::signal
