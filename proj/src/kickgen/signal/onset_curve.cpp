#include "kickgen/signal/onset_curve.hpp"

#include <cmath>
#include <stdexcept>

namespace kickgen::signal {

void ContextBundle::validate() const {
  const std::size_t len = channels[0].length();
  const double fr = channels[0].frame_rate;
  for (const auto& ch : channels) {
    if (ch.length() != len) {
      throw std::invalid_argument("context channels have unequal lengths");
    }
    if (ch.frame_rate != fr) {
      throw std::invalid_argument("context channels have unequal frame rates");
    }
  }
}

void SongRecord::validate() const {
  context.validate();
  if (context.length() != target.length()) {
    throw std::invalid_argument("song: context and target lengths differ");
  }
  if (!(tempo_bpm > 0.0)) {
    throw std::invalid_argument("song: tempo must be positive");
  }
}

void AugmentationParams::validate() const {
  if (shift < -kMaxShiftFrames || shift > kMaxShiftFrames) {
    throw std::invalid_argument("augmentation shift out of [-150, 150]");
  }
  if (scale < kMinScale || scale > kMaxScale) {
    throw std::invalid_argument("augmentation scale out of [0.8, 1.2]");
  }
}

OnsetCurve standardize(const OnsetCurve& curve) {
  const std::size_t n = curve.values.size();
  if (n < 2) {
    throw std::invalid_argument("standardize: need at least 2 samples");
  }
  double mean = 0.0;
  for (double v : curve.values) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("standardize: non-finite input");
    }
    mean += v;
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : curve.values) {
    const double d = v - mean;
    var += d * d;
  }
  var /= static_cast<double>(n);  // population variance
  if (var == 0.0) {
    throw std::invalid_argument("standardize: zero variance input");
  }
  const double inv_sd = 1.0 / std::sqrt(var);
  OnsetCurve out;
  out.frame_rate = curve.frame_rate;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.values[i] = (curve.values[i] - mean) * inv_sd;
  }
  return out;
}

std::vector<double> warp_values(const std::vector<double>& in, int shift,
                                double scale) {
  const std::size_t n = in.size();
  std::vector<double> scaled(n, 0.0);
  if (scale == 1.0) {
    scaled = in;
  } else {
    for (std::size_t t = 0; t < n; ++t) {
      const double pos = scale * static_cast<double>(t);
      const auto lo = static_cast<std::size_t>(pos);
      if (lo + 1 < n) {
        const double frac = pos - static_cast<double>(lo);
        scaled[t] = in[lo] * (1.0 - frac) + in[lo + 1] * frac;
      } else if (lo < n) {
        // last sample: no right neighbor to interpolate against
        scaled[t] = (pos == static_cast<double>(lo)) ? in[lo] : 0.0;
      }
    }
  }
  if (shift == 0) return scaled;
  std::vector<double> out(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    const std::int64_t src = static_cast<std::int64_t>(t) - shift;
    if (src >= 0 && src < static_cast<std::int64_t>(n)) {
      out[t] = scaled[static_cast<std::size_t>(src)];
    }
  }
  return out;
}

OnsetCurve apply_time_warp(const OnsetCurve& curve,
                           const AugmentationParams& params) {
  if (curve.values.size() < 2) {
    throw std::invalid_argument("apply_time_warp: need at least 2 samples");
  }
  // The warp itself accepts any positive factor; the [0.8, 1.2] / [-150, 150]
  // bounds are a property of the augmentation draw, enforced where draws
  // are made.
  if (!(params.scale > 0.0) || !std::isfinite(params.scale)) {
    throw std::invalid_argument("apply_time_warp: scale must be positive");
  }
  OnsetCurve out;
  out.frame_rate = curve.frame_rate;
  out.values = warp_values(curve.values, params.shift, params.scale);
  return out;
}

}  // namespace kickgen::signal
