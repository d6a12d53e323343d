#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "kickgen/common/rng.hpp"
#include "kickgen/diffnum/checkpoint.hpp"
#include "kickgen/diffnum/tape.hpp"
#include "kickgen/cgae/mapping_codes.hpp"
#include "kickgen/signal/onset_curve.hpp"

namespace kickgen::cgae {

using diffnum::ConvSpec;
using diffnum::Tape;
using diffnum::TensorF;
using diffnum::TensorT;

/// Architecture description. The context encoder U and target encoder V are
/// 8 dilated layers (kernel size 2, dilations doubling); U keeps the four
/// context channels in separate groups for the first six layers and mixes
/// them in the top two. The mapping stack W and the discriminator are
/// pointwise (kernel size 1). A width scale shrinks every hidden width while
/// keeping the code dimension Q and the scalar critic output.
struct ModelSpec {
  int context_channels = 4;        // M
  int code_dims = 16;              // Q
  double width_scale = 1.0;
  double frame_rate = signal::kDefaultFrameRate;
  int gate_channels = 256;         // K after scaling
  std::vector<ConvSpec> u, v, w, disc;

  static ModelSpec make(double width_scale = 1.0,
                        double frame_rate = signal::kDefaultFrameRate);

  /// Frames one encoder output depends on: 1 + sum (R-1)*dilation.
  int receptive_field() const;
};

template <typename S>
struct CgaeModelT {
  ModelSpec spec;
  diffnum::ParamStoreT<S> params;  // groups: cgae (u/v/w) and discriminator
};

using CgaeModel = CgaeModelT<float>;

namespace detail {
template <typename S>
void init_params(CgaeModelT<S>& model, Rng& rng);
}

/// Fresh model with zero-mean Gaussian kernels, std 1/sqrt(fan_in); no
/// biases anywhere, so an all-zero input propagates to an all-zero output.
template <typename S>
CgaeModelT<S> make_model(const ModelSpec& spec, Rng& rng) {
  CgaeModelT<S> model;
  model.spec = spec;
  detail::init_params(model, rng);
  return model;
}

/// Shared graph-building state: parameter nodes are created once per tape
/// so gradients from every use of a kernel accumulate into one entry.
template <typename S>
struct GraphContext {
  Tape<S>& tape;
  CgaeModelT<S>& model;
  bool cgae_requires_grad = false;
  bool disc_requires_grad = false;
  std::unordered_map<int, int> param_nodes;

  GraphContext(Tape<S>& t, CgaeModelT<S>& m) : tape(t), model(m) {}

  int param_node(const std::string& name) {
    const int idx = model.params.index_of(name);
    if (idx < 0) throw std::invalid_argument("unknown model parameter: " + name);
    auto it = param_nodes.find(idx);
    if (it != param_nodes.end()) return it->second;
    const bool req = model.params.entry(idx).group == diffnum::kGroupDisc
                         ? disc_requires_grad
                         : cgae_requires_grad;
    const int node = tape.param(model.params, idx, req);
    param_nodes.emplace(idx, node);
    return node;
  }
};

// --- stack builders (SELU between layers, linear stack outputs) ---

template <typename S>
int build_stack(GraphContext<S>& ctx, const char* prefix,
                const std::vector<ConvSpec>& specs, int in,
                std::vector<int>* layer_outs = nullptr) {
  int id = in;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const int k = ctx.param_node(std::string(prefix) + "." + std::to_string(i));
    id = ctx.tape.conv1d(id, k, specs[i]);
    if (layer_outs) layer_outs->push_back(id);
    if (i + 1 < specs.size()) id = ctx.tape.selu(id);
  }
  return id;
}

/// Tied-weight deconvolution: the adjoints of a stack's layers applied in
/// reverse order, SELU between them, linear output.
template <typename S>
int build_stack_adjoint(GraphContext<S>& ctx, const char* prefix,
                        const std::vector<ConvSpec>& specs, int in) {
  int id = in;
  for (std::size_t i = specs.size(); i-- > 0;) {
    const int k = ctx.param_node(std::string(prefix) + "." + std::to_string(i));
    id = ctx.tape.conv1d_transposed(id, k, specs[i]);
    if (i > 0) id = ctx.tape.selu(id);
  }
  return id;
}

template <typename S>
int build_u_stack(GraphContext<S>& ctx, int x,
                  std::vector<int>* layer_outs = nullptr) {
  return build_stack(ctx, "u", ctx.model.spec.u, x, layer_outs);
}

template <typename S>
int build_v_stack(GraphContext<S>& ctx, int y) {
  return build_stack(ctx, "v", ctx.model.spec.v, y);
}

/// m = W(U*x . V*y); returns the mapping node and the shared U*x activation.
struct EncoderNodes {
  int ux = -1;
  int m = -1;
};

template <typename S>
EncoderNodes build_mappings(GraphContext<S>& ctx, int x, int y) {
  EncoderNodes out;
  out.ux = build_u_stack(ctx, x);
  const int vy = build_v_stack(ctx, y);
  const int gate = ctx.tape.hadamard(out.ux, vy);
  out.m = build_stack(ctx, "w", ctx.model.spec.w, gate);
  return out;
}

/// y~ = V^T(U*x . W^T(m)); `ux` is the encoder output for the (possibly
/// transformed) context to decode against.
template <typename S>
int build_reconstruction(GraphContext<S>& ctx, int ux, int m) {
  const int wtm = build_stack_adjoint(ctx, "w", ctx.model.spec.w, m);
  const int gate = ctx.tape.hadamard(ux, wtm);
  return build_stack_adjoint(ctx, "v", ctx.model.spec.v, gate);
}

/// Pointwise critic over concat(U*x, codes); scores shape (B, 1, T).
template <typename S>
int build_discriminator(GraphContext<S>& ctx, int codes, int ux) {
  const auto& spec = ctx.model.spec;
  const auto& cv = ctx.tape.value(codes);
  const auto& uv = ctx.tape.value(ux);
  if (cv.channels() != static_cast<std::size_t>(spec.code_dims) ||
      uv.channels() != static_cast<std::size_t>(spec.gate_channels)) {
    throw std::invalid_argument(
        "discriminator: channel-count mismatch with model spec");
  }
  const int joint = ctx.tape.concat_channels(ux, codes);
  return build_stack(ctx, "disc", spec.disc, joint);
}

// --- tensor conversions ---

TensorF context_to_tensor(const signal::ContextBundle& x);
TensorF curve_to_tensor(const signal::OnsetCurve& y);
TensorF codes_to_tensor(const MappingCodes& m);
MappingCodes tensor_to_codes(const TensorF& t);
signal::OnsetCurve tensor_to_curve(const TensorF& t, double frame_rate);

// --- inference API (no gradients) ---

MappingCodes infer_mappings(const CgaeModel& model,
                            const signal::ContextBundle& x,
                            const signal::OnsetCurve& y);

signal::OnsetCurve reconstruct(const CgaeModel& model,
                               const signal::ContextBundle& x,
                               const MappingCodes& m);

/// Applies the time warp to every context channel, then reconstructs with
/// the unchanged mapping codes.
signal::OnsetCurve reconstruct_augmented(const CgaeModel& model,
                                         const signal::ContextBundle& x,
                                         const MappingCodes& m,
                                         const signal::AugmentationParams& p);

/// Encoder output U*x for a context bundle (K x T), e.g. as critic input.
TensorF encode_context(const CgaeModel& model, const signal::ContextBundle& x);

/// Per-timestep critic scores for (codes, U*x).
std::vector<double> discriminate(const CgaeModel& model, const MappingCodes& m,
                                 const TensorF& ux);

/// One standard-normal code broadcast across all T columns.
MappingCodes sample_codes(int q, std::size_t t_len, Rng& rng);

// --- checkpoint plumbing ---

nlohmann::json model_meta(const ModelSpec& spec);
ModelSpec model_spec_from_meta(const nlohmann::json& meta);
void save_model(const std::string& path, const CgaeModel& model,
                const nlohmann::json& extra_meta = {});
CgaeModel load_model(const std::string& path);

}  // namespace kickgen::cgae
