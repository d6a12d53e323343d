#include "kickgen/dsp/butterworth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kickgen::dsp {

Biquad butter2_lowpass(double wn) {
  if (!(wn > 0.0) || !(wn < 1.0)) {
    throw std::invalid_argument("butter2: wn must be in (0, 1)");
  }
  // analog prototype s^2 + sqrt(2) s + 1, cutoff pre-warped to
  // tan(pi*wn/2), discretized with s = (1 - z^-1) / (1 + z^-1)
  const double warped = std::tan(std::numbers::pi * wn / 2.0);
  const double w2 = warped * warped;
  const double norm = 1.0 + std::numbers::sqrt2 * warped + w2;
  Biquad f;
  f.b = {w2 / norm, 2.0 * w2 / norm, w2 / norm};
  f.a = {1.0, 2.0 * (w2 - 1.0) / norm,
         (1.0 - std::numbers::sqrt2 * warped + w2) / norm};
  return f;
}

std::vector<double> lfilter(const Biquad& f, const std::vector<double>& x,
                            std::array<double, 2> zi) {
  std::vector<double> y(x.size());
  double z1 = zi[0], z2 = zi[1];
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double out = f.b[0] * x[n] + z1;
    z1 = f.b[1] * x[n] - f.a[1] * out + z2;
    z2 = f.b[2] * x[n] - f.a[2] * out;
    y[n] = out;
  }
  return y;
}

std::array<double, 2> steady_state_zi(const Biquad& f) {
  // direct form II transposed steady state for unit step input/output
  const double z2 = f.b[2] - f.a[2];
  const double z1 = f.b[1] - f.a[1] + z2;
  return {z1, z2};
}

signal::OnsetCurve smooth_zero_phase(const signal::OnsetCurve& curve) {
  const std::size_t n = curve.length();
  if (n <= static_cast<std::size_t>(kSmoothPadLen) + 3) {
    throw std::invalid_argument(
        "smooth_zero_phase: curve too short for filter warm-up");
  }
  const Biquad f = butter2_lowpass(kSmoothCutoff);
  const auto zi = steady_state_zi(f);
  const auto pad = static_cast<std::size_t>(kSmoothPadLen);

  // odd reflection on both ends: x[-i] = 2 x[0] - x[i]
  std::vector<double> ext(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) {
    ext[i] = 2.0 * curve.values[0] - curve.values[pad - i];
    ext[n + pad + i] = 2.0 * curve.values[n - 1] - curve.values[n - 2 - i];
  }
  std::copy(curve.values.begin(), curve.values.end(), ext.begin() + pad);

  auto fwd = lfilter(f, ext, {zi[0] * ext.front(), zi[1] * ext.front()});
  std::reverse(fwd.begin(), fwd.end());
  auto bwd = lfilter(f, fwd, {zi[0] * fwd.front(), zi[1] * fwd.front()});
  std::reverse(bwd.begin(), bwd.end());

  signal::OnsetCurve out;
  out.frame_rate = curve.frame_rate;
  out.values.assign(bwd.begin() + static_cast<std::ptrdiff_t>(pad),
                    bwd.begin() + static_cast<std::ptrdiff_t>(pad + n));
  return out;
}

}  // namespace kickgen::dsp
