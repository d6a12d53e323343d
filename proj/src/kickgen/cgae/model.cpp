#include "kickgen/cgae/model.hpp"

#include <cmath>
#include <stdexcept>

#include "kickgen/common/errors.hpp"

namespace kickgen::cgae {

namespace {

int scaled_width(int width, double scale, int multiple_of) {
  int w = static_cast<int>(std::llround(width * scale));
  if (w < 1) w = 1;
  if (w % multiple_of != 0) w += multiple_of - (w % multiple_of);
  return w;
}

}  // namespace

ModelSpec ModelSpec::make(double width_scale, double frame_rate) {
  if (!(width_scale > 0.0)) {
    throw std::invalid_argument("model: width_scale must be positive");
  }
  ModelSpec spec;
  spec.width_scale = width_scale;
  spec.frame_rate = frame_rate;

  const int base[8] = {32, 32, 64, 64, 64, 128, 128, 256};
  const int u_groups = 4;
  std::vector<int> widths(8);
  for (int i = 0; i < 8; ++i) {
    // grouped layers must stay divisible by the group count
    widths[static_cast<std::size_t>(i)] =
        scaled_width(base[i], width_scale, i < 6 ? u_groups : 1);
  }
  spec.gate_channels = widths[7];

  for (int i = 0; i < 8; ++i) {
    ConvSpec u;
    u.in_channels = i == 0 ? spec.context_channels : widths[static_cast<std::size_t>(i - 1)];
    u.out_channels = widths[static_cast<std::size_t>(i)];
    u.kernel_size = 2;
    u.dilation = 1 << i;
    u.groups = i < 6 ? u_groups : 1;
    u.validate();
    spec.u.push_back(u);

    ConvSpec v = u;
    v.in_channels = i == 0 ? 1 : widths[static_cast<std::size_t>(i - 1)];
    v.groups = 1;
    v.validate();
    spec.v.push_back(v);
  }

  const int w_base[6] = {128, 128, 64, 32, 32, 16};
  std::vector<int> w_widths(6);
  for (int i = 0; i < 6; ++i) {
    w_widths[static_cast<std::size_t>(i)] =
        i == 5 ? spec.code_dims : scaled_width(w_base[i], width_scale, 1);
  }
  for (int i = 0; i < 6; ++i) {
    ConvSpec w;
    w.in_channels = i == 0 ? spec.gate_channels : w_widths[static_cast<std::size_t>(i - 1)];
    w.out_channels = w_widths[static_cast<std::size_t>(i)];
    w.kernel_size = 1;
    w.dilation = 1;
    w.groups = 1;
    w.validate();
    spec.w.push_back(w);
  }

  const int d_base[5] = {256, 128, 64, 64, 1};
  std::vector<int> d_widths(5);
  for (int i = 0; i < 5; ++i) {
    d_widths[static_cast<std::size_t>(i)] =
        i == 4 ? 1 : scaled_width(d_base[i], width_scale, 1);
  }
  for (int i = 0; i < 5; ++i) {
    ConvSpec d;
    d.in_channels = i == 0 ? spec.gate_channels + spec.code_dims
                           : d_widths[static_cast<std::size_t>(i - 1)];
    d.out_channels = d_widths[static_cast<std::size_t>(i)];
    d.kernel_size = 1;
    d.dilation = 1;
    d.groups = 1;
    d.validate();
    spec.disc.push_back(d);
  }
  return spec;
}

int ModelSpec::receptive_field() const {
  int rf = 1;
  for (const auto& layer : u) {
    rf += (layer.kernel_size - 1) * layer.dilation;
  }
  return rf;
}

namespace detail {

template <typename S>
void init_params(CgaeModelT<S>& model, Rng& rng) {
  const auto add_stack = [&](const char* prefix,
                             const std::vector<ConvSpec>& specs,
                             const char* group) {
    for (std::size_t i = 0; i < specs.size(); ++i) {
      const auto& s = specs[i];
      TensorT<S> k(static_cast<std::size_t>(s.out_channels),
                   static_cast<std::size_t>(s.in_per_group()),
                   static_cast<std::size_t>(s.kernel_size));
      const double std_dev =
          1.0 / std::sqrt(static_cast<double>(s.in_per_group() * s.kernel_size));
      for (auto& w : k.data) w = static_cast<S>(std_dev * rng.normal());
      model.params.add(std::string(prefix) + "." + std::to_string(i), group,
                       std::move(k));
    }
  };
  add_stack("u", model.spec.u, diffnum::kGroupCgae);
  add_stack("v", model.spec.v, diffnum::kGroupCgae);
  add_stack("w", model.spec.w, diffnum::kGroupCgae);
  add_stack("disc", model.spec.disc, diffnum::kGroupDisc);
}

template void init_params<float>(CgaeModelT<float>&, Rng&);
template void init_params<double>(CgaeModelT<double>&, Rng&);

}  // namespace detail

TensorF context_to_tensor(const signal::ContextBundle& x) {
  x.validate();
  const std::size_t T = x.length();
  TensorF t(1, signal::kContextChannels, T);
  for (std::size_t c = 0; c < signal::kContextChannels; ++c) {
    const auto& vals = x.channels[c].values;
    float* row = t.row(0, c);
    for (std::size_t i = 0; i < T; ++i) {
      if (!std::isfinite(vals[i])) {
        throw std::invalid_argument("context contains non-finite values");
      }
      row[i] = static_cast<float>(vals[i]);
    }
  }
  return t;
}

TensorF curve_to_tensor(const signal::OnsetCurve& y) {
  TensorF t(1, 1, y.length());
  for (std::size_t i = 0; i < y.length(); ++i) {
    if (!std::isfinite(y.values[i])) {
      throw std::invalid_argument("curve contains non-finite values");
    }
    t.data[i] = static_cast<float>(y.values[i]);
  }
  return t;
}

TensorF codes_to_tensor(const MappingCodes& m) {
  TensorF t(1, m.q, m.t);
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    t.data[i] = static_cast<float>(m.values[i]);
  }
  return t;
}

MappingCodes tensor_to_codes(const TensorF& t) {
  MappingCodes m(t.channels(), t.time());
  for (std::size_t i = 0; i < t.size(); ++i) {
    m.values[i] = static_cast<double>(t.data[i]);
  }
  return m;
}

signal::OnsetCurve tensor_to_curve(const TensorF& t, double frame_rate) {
  signal::OnsetCurve c;
  c.frame_rate = frame_rate;
  c.values.resize(t.time());
  for (std::size_t i = 0; i < t.time(); ++i) {
    c.values[i] = static_cast<double>(t.data[i]);
  }
  return c;
}

MappingCodes infer_mappings(const CgaeModel& model,
                            const signal::ContextBundle& x,
                            const signal::OnsetCurve& y) {
  if (x.length() != y.length()) {
    throw std::invalid_argument("infer_mappings: context/target length mismatch");
  }
  Tape<float> tape;
  GraphContext<float> ctx(tape, const_cast<CgaeModel&>(model));
  const int xid = tape.leaf(context_to_tensor(x));
  const int yid = tape.leaf(curve_to_tensor(y));
  const auto enc = build_mappings(ctx, xid, yid);
  return tensor_to_codes(tape.value(enc.m));
}

signal::OnsetCurve reconstruct(const CgaeModel& model,
                               const signal::ContextBundle& x,
                               const MappingCodes& m) {
  if (x.length() != m.t) {
    throw std::invalid_argument("reconstruct: context/code length mismatch");
  }
  if (m.q != static_cast<std::size_t>(model.spec.code_dims)) {
    throw std::invalid_argument("reconstruct: code dimension mismatch");
  }
  Tape<float> tape;
  GraphContext<float> ctx(tape, const_cast<CgaeModel&>(model));
  const int xid = tape.leaf(context_to_tensor(x));
  const int mid = tape.leaf(codes_to_tensor(m));
  const int ux = build_u_stack(ctx, xid);
  const int recon = build_reconstruction(ctx, ux, mid);
  return tensor_to_curve(tape.value(recon), x.frame_rate());
}

signal::OnsetCurve reconstruct_augmented(const CgaeModel& model,
                                         const signal::ContextBundle& x,
                                         const MappingCodes& m,
                                         const signal::AugmentationParams& p) {
  signal::ContextBundle warped = x;
  for (auto& ch : warped.channels) ch = signal::apply_time_warp(ch, p);
  return reconstruct(model, warped, m);
}

TensorF encode_context(const CgaeModel& model, const signal::ContextBundle& x) {
  Tape<float> tape;
  GraphContext<float> ctx(tape, const_cast<CgaeModel&>(model));
  const int xid = tape.leaf(context_to_tensor(x));
  const int ux = build_u_stack(ctx, xid);
  return tape.value(ux);
}

std::vector<double> discriminate(const CgaeModel& model, const MappingCodes& m,
                                 const TensorF& ux) {
  Tape<float> tape;
  GraphContext<float> ctx(tape, const_cast<CgaeModel&>(model));
  const int mid = tape.leaf(codes_to_tensor(m));
  const int uxid = tape.leaf(ux);
  const int scores = build_discriminator(ctx, mid, uxid);
  const auto& v = tape.value(scores);
  std::vector<double> out(v.time());
  for (std::size_t i = 0; i < v.time(); ++i) {
    out[i] = static_cast<double>(v.data[i]);
  }
  return out;
}

MappingCodes sample_codes(int q, std::size_t t_len, Rng& rng) {
  if (q < 1 || t_len == 0) {
    throw std::invalid_argument("sample_codes: bad dimensions");
  }
  std::vector<double> code(static_cast<std::size_t>(q));
  for (auto& v : code) v = rng.normal();
  return MappingCodes::broadcast(code, t_len);
}

nlohmann::json model_meta(const ModelSpec& spec) {
  return nlohmann::json{{"context_channels", spec.context_channels},
                        {"code_dims", spec.code_dims},
                        {"width_scale", spec.width_scale},
                        {"frame_rate", spec.frame_rate}};
}

ModelSpec model_spec_from_meta(const nlohmann::json& meta) {
  ModelSpec spec = ModelSpec::make(meta.at("width_scale").get<double>(),
                                   meta.at("frame_rate").get<double>());
  if (meta.at("context_channels").get<int>() != spec.context_channels ||
      meta.at("code_dims").get<int>() != spec.code_dims) {
    throw FormatError("checkpoint: unsupported model dimensions");
  }
  return spec;
}

void save_model(const std::string& path, const CgaeModel& model,
                const nlohmann::json& extra_meta) {
  nlohmann::json meta = model_meta(model.spec);
  meta["model"] = "cgae";
  for (const auto& [k, v] : extra_meta.items()) meta[k] = v;
  diffnum::save_checkpoint(path, diffnum::snapshot_store(model.params), meta);
}

CgaeModel load_model(const std::string& path) {
  const auto data = diffnum::load_checkpoint(path);
  CgaeModel model;
  model.spec = model_spec_from_meta(data.meta);
  // rebuild the store in canonical order, then overwrite from the file
  Rng dummy(0);
  detail::init_params(model, dummy);
  for (std::size_t i = 0; i < model.params.count(); ++i) {
    auto& e = model.params.entry(static_cast<int>(i));
    const auto* t = data.find(e.name);
    if (!t) throw FormatError("checkpoint: missing tensor " + e.name);
    if (!t->tensor.same_shape(e.value)) {
      throw FormatError("checkpoint: tensor shape mismatch for " + e.name);
    }
    e.value = t->tensor;
  }
  return model;
}

}  // namespace kickgen::cgae
