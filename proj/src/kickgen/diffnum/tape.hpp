#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "kickgen/common/rng.hpp"
#include "kickgen/diffnum/conv.hpp"
#include "kickgen/diffnum/param_store.hpp"
#include "kickgen/diffnum/tensor.hpp"

namespace kickgen::diffnum {

// SELU constants (fixed-point construction of the self-normalizing ELU).
inline constexpr double kSeluLambda = 1.0507009873554805;
inline constexpr double kSeluAlpha = 1.6732632423543772;

template <typename S>
S selu_scalar(S x) {
  return x > S(0) ? static_cast<S>(kSeluLambda) * x
                  : static_cast<S>(kSeluLambda * kSeluAlpha) * std::expm1(x);
}

// float path: exp(x) - 1 is exact at 0 (zero propagation intact) and
// considerably faster than expm1f; the tiny-|x| precision loss is far below
// training noise. The double path keeps expm1 for gradient checks.
template <>
inline float selu_scalar(float x) {
  return x > 0.0f ? static_cast<float>(kSeluLambda) * x
                  : static_cast<float>(kSeluLambda * kSeluAlpha) *
                        (std::exp(x) - 1.0f);
}

template <typename S>
TensorT<S> make_dropout_mask(const std::array<std::size_t, 3>& shape, double p,
                             Rng& rng);

/// Eagerly-evaluated computation graph with reverse-mode gradients.
/// Nodes are created in topological order; backward() walks them in reverse.
template <typename S>
class Tape {
 public:
  enum class Op {
    kLeaf,
    kConv,
    kConvAdjoint,
    kSelu,
    kMulMask,
    kHadamard,
    kAdd,
    kSub,
    kScale,
    kConcatCh,
    kCropTime,
    kMse,
    kConstPen,
    kStdPen,
    kMeanAll,
  };

  struct Node {
    Op op = Op::kLeaf;
    int a = -1, b = -1;
    ConvSpec spec;
    std::size_t t0 = 0;   // crop offset
    double cval = 0.0;    // scale constant
    TensorT<S> aux;       // dropout mask
    TensorT<S> value;
    TensorT<S> grad;
    bool needs_grad = false;
    TensorT<S>* external_grad = nullptr;  // param-store accumulator
  };

  int leaf(TensorT<S> v, bool requires_grad = false) {
    Node n;
    n.value = std::move(v);
    n.needs_grad = requires_grad;
    return push(std::move(n));
  }

  /// Leaf bound to a parameter-store entry; backward() accumulates the
  /// gradient into the entry's grad tensor.
  int param(ParamStoreT<S>& store, int index, bool requires_grad = true) {
    auto& e = store.entry(index);
    Node n;
    n.value = e.value;
    n.needs_grad = requires_grad;
    n.external_grad = requires_grad ? &e.grad : nullptr;
    return push(std::move(n));
  }

  int conv1d(int x, int k, const ConvSpec& spec) {
    Node n;
    n.op = Op::kConv;
    n.a = x;
    n.b = k;
    n.spec = spec;
    n.value = conv1d_forward(value(x), value(k), spec);
    return push(std::move(n), x, k);
  }

  int conv1d_transposed(int y, int k, const ConvSpec& spec) {
    Node n;
    n.op = Op::kConvAdjoint;
    n.a = y;
    n.b = k;
    n.spec = spec;
    n.value = conv1d_adjoint(value(y), value(k), spec);
    return push(std::move(n), y, k);
  }

  int selu(int x) {
    Node n;
    n.op = Op::kSelu;
    n.a = x;
    n.value = TensorT<S>::zeros_like(value(x));
    const auto& in = value(x).data;
    S* out = n.value.data.data();
    elementwise_parallel(in.size(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) out[i] = selu_scalar(in[i]);
    });
    return push(std::move(n), x);
  }

  /// Elementwise product with a fixed mask (inverted-dropout style).
  int mul_mask(int x, TensorT<S> mask) {
    if (!value(x).same_shape(mask)) {
      throw std::invalid_argument("mul_mask: mask shape mismatch");
    }
    Node n;
    n.op = Op::kMulMask;
    n.a = x;
    n.value = TensorT<S>::zeros_like(mask);
    const auto& in = value(x).data;
    S* out = n.value.data.data();
    const S* mk = mask.data.data();
    elementwise_parallel(in.size(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) out[i] = in[i] * mk[i];
    });
    n.aux = std::move(mask);
    return push(std::move(n), x);
  }

  /// Inverted dropout: keeps elements with probability 1-p and scales kept
  /// values by 1/(1-p); identity when not training.
  int dropout(int x, double p, Rng& rng, bool training) {
    if (p < 0.0 || p >= 1.0) {
      throw std::invalid_argument("dropout: p must be in [0, 1)");
    }
    if (!training || p == 0.0) return x;
    return mul_mask(x, make_dropout_mask<S>(value(x).shape, p, rng));
  }

  int hadamard(int a, int b) {
    check_same_shape(a, b, "hadamard");
    Node n;
    n.op = Op::kHadamard;
    n.a = a;
    n.b = b;
    n.value = TensorT<S>::zeros_like(value(a));
    const auto& av = value(a).data;
    const auto& bv = value(b).data;
    S* out = n.value.data.data();
    elementwise_parallel(av.size(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) out[i] = av[i] * bv[i];
    });
    return push(std::move(n), a, b);
  }

  int add(int a, int b) { return binary(Op::kAdd, a, b); }
  int sub(int a, int b) { return binary(Op::kSub, a, b); }

  int scale(int a, double c) {
    Node n;
    n.op = Op::kScale;
    n.a = a;
    n.cval = c;
    n.value = TensorT<S>::zeros_like(value(a));
    const auto& av = value(a).data;
    for (std::size_t i = 0; i < av.size(); ++i) {
      n.value.data[i] = static_cast<S>(c * static_cast<double>(av[i]));
    }
    return push(std::move(n), a);
  }

  /// Concatenate along the channel axis.
  int concat_channels(int a, int b) {
    const auto& av = value(a);
    const auto& bv = value(b);
    if (av.batch() != bv.batch() || av.time() != bv.time()) {
      throw std::invalid_argument("concat_channels: batch/time mismatch");
    }
    Node n;
    n.op = Op::kConcatCh;
    n.a = a;
    n.b = b;
    n.value = TensorT<S>(av.batch(), av.channels() + bv.channels(), av.time());
    for (std::size_t bb = 0; bb < av.batch(); ++bb) {
      for (std::size_t c = 0; c < av.channels(); ++c) {
        std::copy(av.row(bb, c), av.row(bb, c) + av.time(),
                  n.value.row(bb, c));
      }
      for (std::size_t c = 0; c < bv.channels(); ++c) {
        std::copy(bv.row(bb, c), bv.row(bb, c) + bv.time(),
                  n.value.row(bb, av.channels() + c));
      }
    }
    return push(std::move(n), a, b);
  }

  /// Time slice [t0, t0+len).
  int crop_time(int a, std::size_t t0, std::size_t len) {
    const auto& av = value(a);
    if (t0 + len > av.time()) {
      throw std::invalid_argument("crop_time: slice out of range");
    }
    Node n;
    n.op = Op::kCropTime;
    n.a = a;
    n.t0 = t0;
    n.value = TensorT<S>(av.batch(), av.channels(), len);
    for (std::size_t bb = 0; bb < av.batch(); ++bb) {
      for (std::size_t c = 0; c < av.channels(); ++c) {
        std::copy(av.row(bb, c) + t0, av.row(bb, c) + t0 + len,
                  n.value.row(bb, c));
      }
    }
    return push(std::move(n), a);
  }

  /// Mean over all elements of (a - b)^2.
  int mse(int a, int b) {
    check_same_shape(a, b, "mse");
    Node n;
    n.op = Op::kMse;
    n.a = a;
    n.b = b;
    const auto& av = value(a).data;
    const auto& bv = value(b).data;
    double acc = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
      const double d = static_cast<double>(av[i]) - static_cast<double>(bv[i]);
      acc += d * d;
    }
    n.value = TensorT<S>::scalar(static_cast<S>(acc / av.size()));
    check_loss_finite(n.value, "mse");
    return push(std::move(n), a, b);
  }

  /// Temporal smoothness penalty on mapping codes m (B, Q, T):
  /// mean_b (1/T) sum_{t<T-1} mean_q (m[.,t] - m[.,t+1])^2.
  int const_penalty(int m) {
    const auto& mv = value(m);
    if (mv.time() < 2) {
      throw std::invalid_argument("const_penalty: needs T >= 2");
    }
    Node n;
    n.op = Op::kConstPen;
    n.a = m;
    const std::size_t B = mv.batch(), Q = mv.channels(), T = mv.time();
    double acc = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t q = 0; q < Q; ++q) {
        const S* r = mv.row(b, q);
        for (std::size_t t = 0; t + 1 < T; ++t) {
          const double d = static_cast<double>(r[t]) - static_cast<double>(r[t + 1]);
          acc += d * d;
        }
      }
    }
    n.value = TensorT<S>::scalar(
        static_cast<S>(acc / (static_cast<double>(B) * Q * T)));
    check_loss_finite(n.value, "const_penalty");
    return push(std::move(n), m);
  }

  /// Batch-statistics penalty: per map q, observations are all (batch, time)
  /// entries; loss = mean_q [ (var_q - 1)^2 + mu_q^2 ].
  int std_penalty(int m) {
    const auto& mv = value(m);
    const std::size_t B = mv.batch(), Q = mv.channels(), T = mv.time();
    const double N = static_cast<double>(B) * static_cast<double>(T);
    if (N < 2) throw std::invalid_argument("std_penalty: needs N >= 2");
    Node n;
    n.op = Op::kStdPen;
    n.a = m;
    // save per-map mean and variance for backward
    n.aux = TensorT<S>(2, Q, 1);
    double acc = 0.0;
    for (std::size_t q = 0; q < Q; ++q) {
      double mu = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        const S* r = mv.row(b, q);
        for (std::size_t t = 0; t < T; ++t) mu += static_cast<double>(r[t]);
      }
      mu /= N;
      double var = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        const S* r = mv.row(b, q);
        for (std::size_t t = 0; t < T; ++t) {
          const double d = static_cast<double>(r[t]) - mu;
          var += d * d;
        }
      }
      var /= N;
      n.aux.at(0, q, 0) = static_cast<S>(mu);
      n.aux.at(1, q, 0) = static_cast<S>(var);
      acc += (var - 1.0) * (var - 1.0) + mu * mu;
    }
    n.value = TensorT<S>::scalar(static_cast<S>(acc / Q));
    check_loss_finite(n.value, "std_penalty");
    return push(std::move(n), m);
  }

  /// Mean over all elements.
  int mean_all(int a) {
    Node n;
    n.op = Op::kMeanAll;
    n.a = a;
    const auto& av = value(a).data;
    double acc = 0.0;
    for (S v : av) acc += static_cast<double>(v);
    n.value = TensorT<S>::scalar(static_cast<S>(acc / av.size()));
    check_loss_finite(n.value, "mean_all");
    return push(std::move(n), a);
  }

  const TensorT<S>& value(int id) const {
    return nodes_.at(static_cast<std::size_t>(id)).value;
  }
  const TensorT<S>& grad(int id) const {
    return nodes_.at(static_cast<std::size_t>(id)).grad;
  }
  bool has_grad(int id) const {
    return !nodes_.at(static_cast<std::size_t>(id)).grad.data.empty();
  }
  std::size_t node_count() const { return nodes_.size(); }

  /// Reverse sweep from a scalar root; seeds d(root)/d(root) = 1 and
  /// accumulates gradients into every reachable node that needs them,
  /// including bound parameter-store entries.
  void backward(int root) {
    backward_weighted({{root, 1.0}});
  }

  /// Reverse sweep from a weighted sum of scalar roots.
  void backward_weighted(const std::vector<std::pair<int, double>>& roots) {
    int top = -1;
    for (const auto& [id, w] : roots) {
      auto& n = nodes_.at(static_cast<std::size_t>(id));
      if (n.value.size() != 1) {
        throw std::invalid_argument("backward: graph not scalar-rooted");
      }
      ensure_grad(id);
      n.grad.data[0] += static_cast<S>(w);
      top = std::max(top, id);
    }
    for (int id = top; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (!n.needs_grad || n.grad.data.empty()) continue;
      dispatch_backward(n);
    }
    for (auto& n : nodes_) {
      if (n.external_grad && !n.grad.data.empty()) {
        for (std::size_t i = 0; i < n.grad.data.size(); ++i) {
          n.external_grad->data[i] += n.grad.data[i];
        }
      }
    }
  }

 private:
  std::vector<Node> nodes_;

  /// Runs fn over [0, n) in fixed-size ranges; element results do not
  /// depend on the partition.
  template <typename Fn>
  static void elementwise_parallel(std::size_t n, Fn&& fn) {
    constexpr std::size_t kBlock = 16384;
    if (n <= kBlock) {
      fn(0, n);
      return;
    }
    const std::size_t blocks = (n + kBlock - 1) / kBlock;
    ThreadPool::instance().parallel_for(blocks, [&](std::size_t blk) {
      fn(blk * kBlock, std::min(n, (blk + 1) * kBlock));
    });
  }

  int push(Node n, int a = -1, int b = -1) {
    if (a >= 0) n.needs_grad |= nodes_[static_cast<std::size_t>(a)].needs_grad;
    if (b >= 0) n.needs_grad |= nodes_[static_cast<std::size_t>(b)].needs_grad;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  int binary(Op op, int a, int b) {
    check_same_shape(a, b, "add/sub");
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.value = TensorT<S>::zeros_like(value(a));
    const auto& av = value(a).data;
    const auto& bv = value(b).data;
    if (op == Op::kAdd) {
      for (std::size_t i = 0; i < av.size(); ++i) n.value.data[i] = av[i] + bv[i];
    } else {
      for (std::size_t i = 0; i < av.size(); ++i) n.value.data[i] = av[i] - bv[i];
    }
    return push(std::move(n), a, b);
  }

  void check_same_shape(int a, int b, const char* what) const {
    if (!value(a).same_shape(value(b))) {
      throw std::invalid_argument(std::string(what) + ": shape mismatch");
    }
  }

  static void check_loss_finite(const TensorT<S>& v, const char* what) {
    if (!std::isfinite(static_cast<double>(v.data[0]))) {
      throw std::runtime_error(std::string("non-finite value in ") + what);
    }
  }

  TensorT<S>& ensure_grad(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.data.empty()) n.grad = TensorT<S>::zeros_like(n.value);
    return n.grad;
  }

  // First gradient reaching a node is adopted wholesale; later ones add.
  void accumulate(int id, TensorT<S>&& g) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.needs_grad) return;
    if (n.grad.data.empty()) {
      n.grad = std::move(g);
      return;
    }
    add_into(n.grad, g);
  }

  void accumulate(int id, const TensorT<S>& g) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.needs_grad) return;
    if (n.grad.data.empty()) {
      n.grad = g;
      return;
    }
    add_into(n.grad, g);
  }

  static void add_into(TensorT<S>& dst, const TensorT<S>& g) {
    S* out = dst.data.data();
    const S* in = g.data.data();
    elementwise_parallel(g.data.size(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) out[i] += in[i];
    });
  }

  bool wants_grad(int id) const {
    return id >= 0 && nodes_[static_cast<std::size_t>(id)].needs_grad;
  }

  void dispatch_backward(Node& n) {
    const TensorT<S>& g = n.grad;
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kConv: {
        if (wants_grad(n.a)) {
          accumulate(n.a, conv1d_adjoint(g, value(n.b), n.spec));
        }
        if (wants_grad(n.b)) {
          accumulate(n.b, conv1d_kernel_grad(value(n.a), g, n.spec));
        }
        break;
      }
      case Op::kConvAdjoint: {
        if (wants_grad(n.a)) {
          accumulate(n.a, conv1d_forward(g, value(n.b), n.spec));
        }
        if (wants_grad(n.b)) {
          // dk[co,ci',r] = sum_{b,t} g[b,ci,t] * y[b,co,t+r*d]
          accumulate(n.b, conv1d_kernel_grad(g, value(n.a), n.spec));
        }
        break;
      }
      case Op::kSelu: {
        if (!wants_grad(n.a)) break;
        const auto& x = value(n.a).data;
        TensorT<S> dx = TensorT<S>::zeros_like(value(n.a));
        S* out = dx.data.data();
        elementwise_parallel(x.size(), [&](std::size_t lo, std::size_t hi) {
          for (std::size_t i = lo; i < hi; ++i) {
            const S slope = x[i] > S(0)
                                ? static_cast<S>(kSeluLambda)
                                : static_cast<S>(kSeluLambda * kSeluAlpha) *
                                      std::exp(x[i]);
            out[i] = slope * g.data[i];
          }
        });
        accumulate(n.a, std::move(dx));
        break;
      }
      case Op::kMulMask: {
        if (!wants_grad(n.a)) break;
        TensorT<S> dx = TensorT<S>::zeros_like(n.aux);
        S* out = dx.data.data();
        const S* mk = n.aux.data.data();
        elementwise_parallel(dx.data.size(), [&](std::size_t lo, std::size_t hi) {
          for (std::size_t i = lo; i < hi; ++i) out[i] = g.data[i] * mk[i];
        });
        accumulate(n.a, std::move(dx));
        break;
      }
      case Op::kHadamard: {
        if (wants_grad(n.a)) {
          TensorT<S> da = TensorT<S>::zeros_like(g);
          const auto& bv = value(n.b).data;
          S* out = da.data.data();
          elementwise_parallel(da.data.size(), [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i) out[i] = g.data[i] * bv[i];
          });
          accumulate(n.a, std::move(da));
        }
        if (wants_grad(n.b)) {
          TensorT<S> db = TensorT<S>::zeros_like(g);
          const auto& av = value(n.a).data;
          S* out = db.data.data();
          elementwise_parallel(db.data.size(), [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i) out[i] = g.data[i] * av[i];
          });
          accumulate(n.b, std::move(db));
        }
        break;
      }
      case Op::kAdd: {
        if (wants_grad(n.a)) accumulate(n.a, g);
        if (wants_grad(n.b)) accumulate(n.b, g);
        break;
      }
      case Op::kSub: {
        if (wants_grad(n.a)) accumulate(n.a, g);
        if (wants_grad(n.b)) {
          TensorT<S> neg = TensorT<S>::zeros_like(g);
          for (std::size_t i = 0; i < g.data.size(); ++i) neg.data[i] = -g.data[i];
          accumulate(n.b, std::move(neg));
        }
        break;
      }
      case Op::kScale: {
        if (!wants_grad(n.a)) break;
        TensorT<S> da = TensorT<S>::zeros_like(g);
        for (std::size_t i = 0; i < g.data.size(); ++i) {
          da.data[i] = static_cast<S>(n.cval * static_cast<double>(g.data[i]));
        }
        accumulate(n.a, std::move(da));
        break;
      }
      case Op::kConcatCh: {
        const auto& av = value(n.a);
        const auto& bv = value(n.b);
        if (wants_grad(n.a)) {
          TensorT<S> da = TensorT<S>::zeros_like(av);
          for (std::size_t bb = 0; bb < av.batch(); ++bb) {
            for (std::size_t c = 0; c < av.channels(); ++c) {
              std::copy(g.row(bb, c), g.row(bb, c) + av.time(), da.row(bb, c));
            }
          }
          accumulate(n.a, std::move(da));
        }
        if (wants_grad(n.b)) {
          TensorT<S> db = TensorT<S>::zeros_like(bv);
          for (std::size_t bb = 0; bb < bv.batch(); ++bb) {
            for (std::size_t c = 0; c < bv.channels(); ++c) {
              std::copy(g.row(bb, av.channels() + c),
                        g.row(bb, av.channels() + c) + bv.time(), db.row(bb, c));
            }
          }
          accumulate(n.b, std::move(db));
        }
        break;
      }
      case Op::kCropTime: {
        if (!wants_grad(n.a)) break;
        const auto& av = value(n.a);
        TensorT<S> da = TensorT<S>::zeros_like(av);
        for (std::size_t bb = 0; bb < av.batch(); ++bb) {
          for (std::size_t c = 0; c < av.channels(); ++c) {
            S* dst = da.row(bb, c) + n.t0;
            const S* src = g.row(bb, c);
            for (std::size_t t = 0; t < g.time(); ++t) dst[t] += src[t];
          }
        }
        accumulate(n.a, std::move(da));
        break;
      }
      case Op::kMse: {
        const auto& av = value(n.a).data;
        const auto& bv = value(n.b).data;
        const double go = static_cast<double>(g.data[0]);
        const double c = 2.0 * go / static_cast<double>(av.size());
        if (wants_grad(n.a)) {
          TensorT<S> da = TensorT<S>::zeros_like(value(n.a));
          for (std::size_t i = 0; i < av.size(); ++i) {
            da.data[i] = static_cast<S>(
                c * (static_cast<double>(av[i]) - static_cast<double>(bv[i])));
          }
          accumulate(n.a, std::move(da));
        }
        if (wants_grad(n.b)) {
          TensorT<S> db = TensorT<S>::zeros_like(value(n.b));
          for (std::size_t i = 0; i < av.size(); ++i) {
            db.data[i] = static_cast<S>(
                -c * (static_cast<double>(av[i]) - static_cast<double>(bv[i])));
          }
          accumulate(n.b, std::move(db));
        }
        break;
      }
      case Op::kConstPen: {
        if (!wants_grad(n.a)) break;
        const auto& mv = value(n.a);
        const std::size_t B = mv.batch(), Q = mv.channels(), T = mv.time();
        const double coef = static_cast<double>(g.data[0]) /
                            (static_cast<double>(B) * Q * T);
        TensorT<S> dm = TensorT<S>::zeros_like(mv);
        for (std::size_t b = 0; b < B; ++b) {
          for (std::size_t q = 0; q < Q; ++q) {
            const S* r = mv.row(b, q);
            S* dr = dm.row(b, q);
            for (std::size_t t = 0; t + 1 < T; ++t) {
              const double d =
                  static_cast<double>(r[t]) - static_cast<double>(r[t + 1]);
              dr[t] += static_cast<S>(2.0 * coef * d);
              dr[t + 1] -= static_cast<S>(2.0 * coef * d);
            }
          }
        }
        accumulate(n.a, std::move(dm));
        break;
      }
      case Op::kStdPen: {
        if (!wants_grad(n.a)) break;
        const auto& mv = value(n.a);
        const std::size_t B = mv.batch(), Q = mv.channels(), T = mv.time();
        const double N = static_cast<double>(B) * static_cast<double>(T);
        const double go = static_cast<double>(g.data[0]) / Q;
        TensorT<S> dm = TensorT<S>::zeros_like(mv);
        for (std::size_t q = 0; q < Q; ++q) {
          const double mu = static_cast<double>(n.aux.at(0, q, 0));
          const double var = static_cast<double>(n.aux.at(1, q, 0));
          const double dvar = 2.0 * (var - 1.0);
          for (std::size_t b = 0; b < B; ++b) {
            const S* r = mv.row(b, q);
            S* dr = dm.row(b, q);
            for (std::size_t t = 0; t < T; ++t) {
              const double x = static_cast<double>(r[t]);
              dr[t] = static_cast<S>(
                  go * (dvar * 2.0 * (x - mu) / N + 2.0 * mu / N));
            }
          }
        }
        accumulate(n.a, std::move(dm));
        break;
      }
      case Op::kMeanAll: {
        if (!wants_grad(n.a)) break;
        const auto& av = value(n.a);
        const double c =
            static_cast<double>(g.data[0]) / static_cast<double>(av.size());
        TensorT<S> da = TensorT<S>::zeros_like(av);
        for (auto& v : da.data) v = static_cast<S>(c);
        accumulate(n.a, std::move(da));
        break;
      }
    }
  }
};

/// Fresh inverted-dropout mask: entries are 0 with probability p and
/// 1/(1-p) otherwise.
template <typename S>
TensorT<S> make_dropout_mask(const std::array<std::size_t, 3>& shape, double p,
                             Rng& rng) {
  if (p < 0.0 || p >= 1.0) {
    throw std::invalid_argument("dropout: p must be in [0, 1)");
  }
  TensorT<S> mask(shape[0], shape[1], shape[2]);
  const S keep = static_cast<S>(1.0 / (1.0 - p));
  for (auto& v : mask.data) v = (rng.uniform() < p) ? S(0) : keep;
  return mask;
}

using TapeF = Tape<float>;
using TapeD = Tape<double>;

}  // namespace kickgen::diffnum
