#pragma once

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "kickgen/common/threading.hpp"
#include "kickgen/diffnum/tensor.hpp"

namespace kickgen::diffnum {

/// Shape of one causal dilated grouped 1D convolution. Padding is implicit:
/// (kernel_size - 1) * dilation zeros on the left, so output length equals
/// input length.
struct ConvSpec {
  int in_channels = 1;
  int out_channels = 1;
  int kernel_size = 1;
  int dilation = 1;
  int groups = 1;

  void validate() const {
    if (in_channels < 1 || out_channels < 1 || kernel_size < 1 ||
        dilation < 1 || groups < 1) {
      throw std::invalid_argument("conv spec: all fields must be >= 1");
    }
    if (in_channels % groups != 0 || out_channels % groups != 0) {
      throw std::invalid_argument(
          "conv spec: channel counts not divisible by groups");
    }
  }

  int in_per_group() const { return in_channels / groups; }
  int out_per_group() const { return out_channels / groups; }
};

template <typename S>
void check_conv_shapes(const TensorT<S>& x, const TensorT<S>& k,
                       const ConvSpec& spec, bool input_is_out_side) {
  spec.validate();
  const std::size_t want_ch = static_cast<std::size_t>(
      input_is_out_side ? spec.out_channels : spec.in_channels);
  if (x.channels() != want_ch) {
    throw std::invalid_argument(
        "conv: input has " + std::to_string(x.channels()) +
        " channels, spec expects " + std::to_string(want_ch));
  }
  if (k.shape[0] != static_cast<std::size_t>(spec.out_channels) ||
      k.shape[1] != static_cast<std::size_t>(spec.in_per_group()) ||
      k.shape[2] != static_cast<std::size_t>(spec.kernel_size)) {
    throw std::invalid_argument("conv: kernel shape does not match spec");
  }
}

namespace detail {

// y[t] += w0*x[t]; t in [0, n)
template <typename S>
void axpy(S* __restrict__ y, const S* __restrict__ x, S w, std::size_t n) {
  for (std::size_t t = 0; t < n; ++t) y[t] += w * x[t];
}

// sum_i a[i]*b[i] with independent accumulation lanes; the summation tree
// is fixed, so results are bitwise reproducible. Lanes accumulate in the
// native scalar type: double precision where gradients are checked against
// finite differences, full SIMD width in the float training path.
template <typename S>
double dot_lanes(const S* __restrict__ a, const S* __restrict__ b,
                 std::size_t n) {
  constexpr std::size_t kLanes = sizeof(S) == 4 ? 16 : 8;
  S lanes[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t j = 0; j < kLanes; ++j) {
      lanes[j] += a[i + j] * b[i + j];
    }
  }
  S tail = S(0);
  for (; i < n; ++i) tail += a[i] * b[i];
  for (std::size_t step = kLanes / 2; step > 0; step /= 2) {
    for (std::size_t j = 0; j < step; ++j) lanes[j] += lanes[j + step];
  }
  return static_cast<double>(lanes[0] + tail);
}

// One pass per channel block of four: both taps fused so each y element is
// touched once per block.
template <typename S>
void accumulate_causal(S* __restrict__ yr, const S* const* xs,
                       const S* weights, int block, std::size_t taps,
                       std::size_t d, std::size_t T) {
  if (taps == 1) {
    switch (block) {
      case 4: {
        const S w0 = weights[0], w1 = weights[1], w2 = weights[2],
                w3 = weights[3];
        const S *__restrict__ x0 = xs[0], *__restrict__ x1 = xs[1],
                *__restrict__ x2 = xs[2], *__restrict__ x3 = xs[3];
        for (std::size_t t = 0; t < T; ++t) {
          yr[t] += w0 * x0[t] + w1 * x1[t] + w2 * x2[t] + w3 * x3[t];
        }
        return;
      }
      default:
        for (int c = 0; c < block; ++c) axpy(yr, xs[c], weights[c], T);
        return;
    }
  }
  // taps == 2 (the only other size used by the model); generic fallback below
  if (taps == 2) {
    const std::size_t head = std::min(d, T);
    switch (block) {
      case 4: {
        const S w00 = weights[0], w01 = weights[1], w10 = weights[2],
                w11 = weights[3], w20 = weights[4], w21 = weights[5],
                w30 = weights[6], w31 = weights[7];
        const S *__restrict__ x0 = xs[0], *__restrict__ x1 = xs[1],
                *__restrict__ x2 = xs[2], *__restrict__ x3 = xs[3];
        for (std::size_t t = 0; t < head; ++t) {
          yr[t] += w00 * x0[t] + w10 * x1[t] + w20 * x2[t] + w30 * x3[t];
        }
        for (std::size_t t = head; t < T; ++t) {
          yr[t] += w00 * x0[t] + w01 * x0[t - d] + w10 * x1[t] +
                   w11 * x1[t - d] + w20 * x2[t] + w21 * x2[t - d] +
                   w30 * x3[t] + w31 * x3[t - d];
        }
        return;
      }
      default: {
        for (int c = 0; c < block; ++c) {
          const S w0 = weights[2 * c], w1 = weights[2 * c + 1];
          const S* __restrict__ x = xs[c];
          for (std::size_t t = 0; t < head; ++t) yr[t] += w0 * x[t];
          for (std::size_t t = head; t < T; ++t) {
            yr[t] += w0 * x[t] + w1 * x[t - d];
          }
        }
        return;
      }
    }
  }
  for (int c = 0; c < block; ++c) {
    for (std::size_t r = 0; r < taps; ++r) {
      const std::size_t off = r * d;
      if (off >= T) break;
      axpy(yr + off, xs[c], weights[c * taps + r], T - off);
    }
  }
}

// Anticausal counterpart: y[t] += sum_r w_r * x[t + r*d].
template <typename S>
void accumulate_anticausal(S* __restrict__ yr, const S* const* xs,
                           const S* weights, int block, std::size_t taps,
                           std::size_t d, std::size_t T) {
  if (taps == 1) {
    accumulate_causal(yr, xs, weights, block, 1, d, T);
    return;
  }
  if (taps == 2) {
    const std::size_t body = T > d ? T - d : 0;
    switch (block) {
      case 4: {
        const S w00 = weights[0], w01 = weights[1], w10 = weights[2],
                w11 = weights[3], w20 = weights[4], w21 = weights[5],
                w30 = weights[6], w31 = weights[7];
        const S *__restrict__ x0 = xs[0], *__restrict__ x1 = xs[1],
                *__restrict__ x2 = xs[2], *__restrict__ x3 = xs[3];
        for (std::size_t t = 0; t < body; ++t) {
          yr[t] += w00 * x0[t] + w01 * x0[t + d] + w10 * x1[t] +
                   w11 * x1[t + d] + w20 * x2[t] + w21 * x2[t + d] +
                   w30 * x3[t] + w31 * x3[t + d];
        }
        for (std::size_t t = body; t < T; ++t) {
          yr[t] += w00 * x0[t] + w10 * x1[t] + w20 * x2[t] + w30 * x3[t];
        }
        return;
      }
      default: {
        for (int c = 0; c < block; ++c) {
          const S w0 = weights[2 * c], w1 = weights[2 * c + 1];
          const S* __restrict__ x = xs[c];
          for (std::size_t t = 0; t < body; ++t) {
            yr[t] += w0 * x[t] + w1 * x[t + d];
          }
          for (std::size_t t = body; t < T; ++t) yr[t] += w0 * x[t];
        }
        return;
      }
    }
  }
  for (int c = 0; c < block; ++c) {
    for (std::size_t r = 0; r < taps; ++r) {
      const std::size_t off = r * d;
      if (off >= T) break;
      axpy(yr, xs[c] + off, weights[c * taps + r], T - off);
    }
  }
}

}  // namespace detail

/// y[b,co,t] = sum_{ci in group(co)} sum_r k[co,ci',r] * x[b,ci,t - r*d],
/// x[.,t<0] = 0. No bias.
template <typename S>
TensorT<S> conv1d_forward(const TensorT<S>& x, const TensorT<S>& k,
                          const ConvSpec& spec) {
  check_conv_shapes(x, k, spec, false);
  const std::size_t B = x.batch(), T = x.time();
  const int cg_in = spec.in_per_group(), cg_out = spec.out_per_group();
  const auto taps = static_cast<std::size_t>(spec.kernel_size);
  const auto d = static_cast<std::size_t>(spec.dilation);
  TensorT<S> y(B, static_cast<std::size_t>(spec.out_channels), T);

  ThreadPool::instance().parallel_for(
      B * static_cast<std::size_t>(spec.out_channels), [&](std::size_t idx) {
        const std::size_t b = idx / spec.out_channels;
        const int co = static_cast<int>(idx % spec.out_channels);
        const int g = co / cg_out;
        S* yr = y.row(b, static_cast<std::size_t>(co));
        const S* krow = k.row(static_cast<std::size_t>(co), 0);
        const S* xs[4];
        int cir = 0;
        for (; cir + 4 <= cg_in; cir += 4) {
          for (int c = 0; c < 4; ++c) {
            xs[c] = x.row(b, static_cast<std::size_t>(g * cg_in + cir + c));
          }
          detail::accumulate_causal(yr, xs, krow + cir * taps, 4, taps, d, T);
        }
        if (cir < cg_in) {
          for (int c = 0; cir + c < cg_in; ++c) {
            xs[c] = x.row(b, static_cast<std::size_t>(g * cg_in + cir + c));
          }
          detail::accumulate_causal(yr, xs, krow + cir * taps, cg_in - cir,
                                    taps, d, T);
        }
      });
  return y;
}

/// Exact adjoint of conv1d_forward with the same kernel and spec:
/// out[b,ci,t] = sum_{co in group(ci)} sum_r k[co,ci',r] * y[b,co,t + r*d].
template <typename S>
TensorT<S> conv1d_adjoint(const TensorT<S>& y, const TensorT<S>& k,
                          const ConvSpec& spec) {
  check_conv_shapes(y, k, spec, true);
  const std::size_t B = y.batch(), T = y.time();
  const int cg_in = spec.in_per_group(), cg_out = spec.out_per_group();
  const auto taps = static_cast<std::size_t>(spec.kernel_size);
  const auto d = static_cast<std::size_t>(spec.dilation);
  TensorT<S> out(B, static_cast<std::size_t>(spec.in_channels), T);

  ThreadPool::instance().parallel_for(
      B * static_cast<std::size_t>(spec.in_channels), [&](std::size_t idx) {
        const std::size_t b = idx / spec.in_channels;
        const int ci = static_cast<int>(idx % spec.in_channels);
        const int g = ci / cg_in;
        const int cir = ci - g * cg_in;
        S* outr = out.row(b, static_cast<std::size_t>(ci));
        const S* ys[4];
        S w[4 * 8];
        int cor = 0;
        for (; cor < cg_out; cor += 4) {
          const int block = std::min(4, cg_out - cor);
          for (int c = 0; c < block; ++c) {
            const int co = g * cg_out + cor + c;
            ys[c] = y.row(b, static_cast<std::size_t>(co));
            for (std::size_t r = 0; r < taps; ++r) {
              w[static_cast<std::size_t>(c) * taps + r] =
                  k.at(static_cast<std::size_t>(co),
                       static_cast<std::size_t>(cir), r);
            }
          }
          detail::accumulate_anticausal(outr, ys, w, block, taps, d, T);
        }
      });
  return out;
}

/// Gradient w.r.t. the kernel of conv1d_forward:
/// dk[co,ci',r] = sum_{b,t} dy[b,co,t] * x[b,ci,t - r*d].
/// One task reduces all taps of one (co, ci') pair serially in double.
template <typename S>
TensorT<S> conv1d_kernel_grad(const TensorT<S>& x, const TensorT<S>& dy,
                              const ConvSpec& spec) {
  spec.validate();
  if (x.channels() != static_cast<std::size_t>(spec.in_channels) ||
      dy.channels() != static_cast<std::size_t>(spec.out_channels) ||
      x.batch() != dy.batch() || x.time() != dy.time()) {
    throw std::invalid_argument("conv kernel grad: shape mismatch");
  }
  const std::size_t B = x.batch(), T = x.time();
  const int cg_in = spec.in_per_group(), cg_out = spec.out_per_group();
  const auto taps = static_cast<std::size_t>(spec.kernel_size);
  const auto d = static_cast<std::size_t>(spec.dilation);
  TensorT<S> dk(static_cast<std::size_t>(spec.out_channels),
                static_cast<std::size_t>(cg_in), taps);

  ThreadPool::instance().parallel_for(
      static_cast<std::size_t>(spec.out_channels) * cg_in,
      [&](std::size_t idx) {
        const int co = static_cast<int>(idx / cg_in);
        const int cir = static_cast<int>(idx % cg_in);
        const int g = co / cg_out;
        const int ci = g * cg_in + cir;
        std::array<double, 8> small{};
        std::vector<double> big;
        if (taps > small.size()) big.assign(taps, 0.0);
        double* acc = big.empty() ? small.data() : big.data();
        for (std::size_t b = 0; b < B; ++b) {
          const S* dyr = dy.row(b, static_cast<std::size_t>(co));
          const S* xr = x.row(b, static_cast<std::size_t>(ci));
          for (std::size_t r = 0; r < taps; ++r) {
            const std::size_t off = r * d;
            if (off >= T) break;
            acc[r] += detail::dot_lanes(dyr + off, xr, T - off);
          }
        }
        for (std::size_t r = 0; r < taps; ++r) {
          dk.at(static_cast<std::size_t>(co), static_cast<std::size_t>(cir), r) =
              static_cast<S>(acc[r]);
        }
      });
  return dk;
}

}  // namespace kickgen::diffnum
