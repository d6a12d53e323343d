#pragma once

#include <array>
#include <vector>

#include "kickgen/signal/onset_curve.hpp"

namespace kickgen::dsp {

/// Second-order digital filter, direct-form coefficients with a[0] = 1.
struct Biquad {
  std::array<double, 3> b{};
  std::array<double, 3> a{};
};

/// Order-2 lowpass Butterworth via the pre-warped bilinear transform of the
/// analog prototype. `wn` is the critical frequency as a fraction of
/// Nyquist, in (0, 1). DC gain is exactly 1 by construction.
Biquad butter2_lowpass(double wn);

/// Single forward IIR pass (direct form II transposed) from the given
/// initial state.
std::vector<double> lfilter(const Biquad& f, const std::vector<double>& x,
                            std::array<double, 2> zi);

/// State that makes a step input of height 1 pass through with no
/// transient; scale by the first sample when filtering.
std::array<double, 2> steady_state_zi(const Biquad& f);

/// Zero-phase smoothing: odd-reflection padding of 3*(order+1) = 9 samples,
/// forward pass, reversed pass, both from steady-state initial conditions.
/// Length and frame rate are preserved. The filter is the order-2
/// Butterworth at half Nyquist.
signal::OnsetCurve smooth_zero_phase(const signal::OnsetCurve& curve);

inline constexpr int kSmoothPadLen = 9;  // 3 * (order + 1)
inline constexpr double kSmoothCutoff = 0.5;

}  // namespace kickgen::dsp
