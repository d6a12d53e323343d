#pragma once

#include <string>
#include <vector>

#include "kickgen/signal/onset_curve.hpp"

namespace kickgen::dsp {

struct PeakPickConfig {
  double threshold_ratio = 0.25;  // of the smoothed curve's maximum

  void validate() const;
};

struct Onset {
  double time_s = 0.0;
  double gain = 1.0;  // playback amplitude in [0.7, 1.0]
};

struct OnsetList {
  std::vector<Onset> onsets;  // strictly increasing times

  std::vector<double> times() const {
    std::vector<double> out;
    out.reserve(onsets.size());
    for (const auto& o : onsets) out.push_back(o.time_s);
    return out;
  }
};

/// Thresholded peak selection on an already-smoothed curve: strict local
/// maxima at or above threshold_ratio * max(curve). Gains rise linearly
/// from 0.7 at the threshold to 1.0 at the maximum. A flat or non-positive
/// curve yields an empty list.
OnsetList select_peaks(const signal::OnsetCurve& smoothed,
                       const PeakPickConfig& config);

/// Full picker: zero-phase Butterworth smoothing, then select_peaks.
/// The input is expected to be a standardized onset-strength curve.
OnsetList pick_peaks(const signal::OnsetCurve& standardized,
                     const PeakPickConfig& config);

/// Two-column CSV (time_s, gain).
void write_onsets_csv(const std::string& path, const OnsetList& onsets);
OnsetList read_onsets_csv(const std::string& path);

}  // namespace kickgen::dsp
