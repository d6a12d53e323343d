#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace kickgen::diffnum {

/// Dense rank-3 tensor. Activations are laid out (batch, channels, time),
/// convolution kernels (out_channels, in_channels_per_group, taps), and
/// scalars (1, 1, 1). Data is row-major with time contiguous.
template <typename S>
struct TensorT {
  std::array<std::size_t, 3> shape{0, 0, 0};
  std::vector<S> data;

  TensorT() = default;
  TensorT(std::size_t a, std::size_t b, std::size_t c)
      : shape{a, b, c}, data(a * b * c, S(0)) {}

  static TensorT zeros_like(const TensorT& o) {
    return TensorT(o.shape[0], o.shape[1], o.shape[2]);
  }

  static TensorT scalar(S v) {
    TensorT t(1, 1, 1);
    t.data[0] = v;
    return t;
  }

  std::size_t size() const { return data.size(); }
  std::size_t batch() const { return shape[0]; }
  std::size_t channels() const { return shape[1]; }
  std::size_t time() const { return shape[2]; }

  S& at(std::size_t a, std::size_t b, std::size_t c) {
    return data[(a * shape[1] + b) * shape[2] + c];
  }
  S at(std::size_t a, std::size_t b, std::size_t c) const {
    return data[(a * shape[1] + b) * shape[2] + c];
  }

  S* row(std::size_t b, std::size_t c) {
    return data.data() + (b * shape[1] + c) * shape[2];
  }
  const S* row(std::size_t b, std::size_t c) const {
    return data.data() + (b * shape[1] + c) * shape[2];
  }

  S scalar_value() const {
    if (size() != 1) throw std::logic_error("tensor is not a scalar");
    return data[0];
  }

  bool same_shape(const TensorT& o) const { return shape == o.shape; }

  bool all_finite() const {
    for (S v : data) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }
};

using TensorF = TensorT<float>;
using TensorD = TensorT<double>;

}  // namespace kickgen::diffnum
