#pragma once

#include <complex>
#include <vector>

#include "kickgen/dsp/audio.hpp"
#include "kickgen/signal/onset_curve.hpp"

namespace kickgen::dsp {

/// In-place radix-2 FFT; size must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& data);

inline constexpr int kStftBlock = 1024;
inline constexpr int kStftHop = 512;

/// Complex-domain onset strength: STFT (Hann window 1024, hop 512), and per
/// frame the summed magnitude deviation of each bin from its phase-advance
/// prediction; the first two frames are zero. Output frame rate is
/// sample_rate / 512. Standardized per signal unless `standardized` is
/// false (the raw curve; digital silence then stays all-zero).
signal::OnsetCurve complex_domain_onsets(const AudioBuffer& audio,
                                         bool standardized = true);

}  // namespace kickgen::dsp
