#include "kickgen/train/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "kickgen/common/errors.hpp"
#include "kickgen/diffnum/checkpoint.hpp"

namespace kickgen::train {

using diffnum::Tape;

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (excerpt_len < 2) throw ConfigError("train: excerpt_len too small");
  if (margin < 0) throw ConfigError("train: margin must be >= 0");
  if (augment && margin < signal::kMaxShiftFrames) {
    throw ConfigError("train: margin must cover the maximum shift (150)");
  }
  if (dropout_p < 0.0 || dropout_p >= 1.0) {
    throw ConfigError("train: dropout_p must be in [0, 1)");
  }
}

signal::AugmentationParams sample_augmentation(Rng& rng) {
  signal::AugmentationParams p;
  p.shift = static_cast<int>(
      rng.uniform_int(-signal::kMaxShiftFrames, signal::kMaxShiftFrames));
  p.scale = rng.uniform(signal::kMinScale, signal::kMaxScale);
  return p;
}

std::vector<ExcerptRef> draw_excerpts(
    const std::vector<signal::SongRecord>& corpus, int batch_size,
    std::size_t window, Rng& rng) {
  std::vector<ExcerptRef> refs;
  refs.reserve(static_cast<std::size_t>(batch_size));
  for (int b = 0; b < batch_size; ++b) {
    ExcerptRef r;
    r.song = static_cast<int>(
        rng.uniform_int(0, static_cast<std::int64_t>(corpus.size()) - 1));
    const std::size_t len = corpus[static_cast<std::size_t>(r.song)].length();
    r.pos = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(len - window)));
    refs.push_back(r);
  }
  return refs;
}

template <typename S>
BatchT<S> assemble_batch(const std::vector<signal::SongRecord>& corpus,
                         const std::vector<ExcerptRef>& refs,
                         std::size_t window) {
  const std::size_t B = refs.size();
  BatchT<S> batch{TensorT<S>(B, signal::kContextChannels, window),
                  TensorT<S>(B, 1, window)};
  for (std::size_t b = 0; b < B; ++b) {
    const auto& song = corpus.at(static_cast<std::size_t>(refs[b].song));
    const std::size_t pos = refs[b].pos;
    for (std::size_t c = 0; c < signal::kContextChannels; ++c) {
      const auto& vals = song.context.channels[c].values;
      S* row = batch.x.row(b, c);
      for (std::size_t t = 0; t < window; ++t) {
        row[t] = static_cast<S>(vals[pos + t]);
      }
    }
    S* yrow = batch.y.row(b, 0);
    for (std::size_t t = 0; t < window; ++t) {
      yrow[t] = static_cast<S>(song.target.values[pos + t]);
    }
  }
  return batch;
}

template <typename S>
StepDrawsT<S> draw_step(const cgae::ModelSpec& spec, std::size_t batch,
                        std::size_t window, const TrainConfig& cfg,
                        bool with_reconstruction, Rng& drop_rng, Rng& eta_rng,
                        Rng* aug_rng) {
  StepDrawsT<S> draws;
  if (cfg.dropout_p > 0.0) {
    draws.mask_enc = diffnum::make_dropout_mask<S>(
        {batch, static_cast<std::size_t>(spec.context_channels), window},
        cfg.dropout_p, drop_rng);
    if (with_reconstruction) {
      draws.mask_dec = diffnum::make_dropout_mask<S>(
          {batch, static_cast<std::size_t>(spec.context_channels), window},
          cfg.dropout_p, drop_rng);
    }
  }
  if (with_reconstruction && aug_rng) {
    draws.thetas.reserve(batch);
    for (std::size_t b = 0; b < batch; ++b) {
      draws.thetas.push_back(sample_augmentation(*aug_rng));
    }
  }
  draws.eta = TensorT<S>(batch, static_cast<std::size_t>(spec.code_dims), window);
  for (auto& v : draws.eta.data) v = static_cast<S>(eta_rng.normal());
  return draws;
}

template <typename S>
TensorT<S> warp_tensor(const TensorT<S>& x,
                       const std::vector<signal::AugmentationParams>& thetas) {
  if (thetas.empty()) return x;
  if (thetas.size() != x.batch()) {
    throw std::invalid_argument("warp_tensor: one theta per batch item");
  }
  TensorT<S> out = TensorT<S>::zeros_like(x);
  std::vector<double> buf(x.time());
  for (std::size_t b = 0; b < x.batch(); ++b) {
    const auto& p = thetas[b];
    for (std::size_t c = 0; c < x.channels(); ++c) {
      const S* src = x.row(b, c);
      if (p.shift == 0 && p.scale == 1.0) {
        std::copy(src, src + x.time(), out.row(b, c));
        continue;
      }
      for (std::size_t t = 0; t < x.time(); ++t) {
        buf[t] = static_cast<double>(src[t]);
      }
      const auto warped = signal::warp_values(buf, p.shift, p.scale);
      S* dst = out.row(b, c);
      for (std::size_t t = 0; t < x.time(); ++t) {
        dst[t] = static_cast<S>(warped[t]);
      }
    }
  }
  return out;
}

namespace {

struct ScoredWindow {
  std::size_t t0 = 0;
  std::size_t len = 0;
};

ScoredWindow scored_window(std::size_t window, const TrainConfig& cfg) {
  const auto margin = static_cast<std::size_t>(cfg.margin);
  if (window <= 2 * margin) {
    throw std::invalid_argument("scored window is empty: window <= 2*margin");
  }
  return {margin, window - 2 * margin};
}

template <typename S>
int adversarial_mean(GraphContext<S>& ctx, int m, int ux, int eta,
                     const ScoredWindow& win) {
  auto& tape = ctx.tape;
  const int s_m = cgae::build_discriminator(ctx, m, ux);
  const int s_eta = cgae::build_discriminator(ctx, eta, ux);
  return tape.sub(tape.mean_all(tape.crop_time(s_m, win.t0, win.len)),
                  tape.mean_all(tape.crop_time(s_eta, win.t0, win.len)));
}

}  // namespace

template <typename S>
StepNodes build_step1(GraphContext<S>& ctx, const BatchT<S>& batch,
                      const StepDrawsT<S>& draws, const TrainConfig& cfg) {
  auto& tape = ctx.tape;
  const auto win = scored_window(batch.x.time(), cfg);
  const int x = tape.leaf(batch.x);
  const int y = tape.leaf(batch.y);
  const int xd =
      draws.mask_enc.size() ? tape.mul_mask(x, draws.mask_enc) : x;
  const auto enc = cgae::build_mappings(ctx, xd, y);
  const int eta = tape.leaf(draws.eta);
  StepNodes nodes;
  nodes.m = enc.m;
  nodes.ladv = adversarial_mean(ctx, enc.m, enc.ux, eta, win);
  return nodes;
}

template <typename S>
StepNodes build_step2(GraphContext<S>& ctx, const BatchT<S>& batch,
                      const StepDrawsT<S>& draws, const TrainConfig& cfg) {
  auto& tape = ctx.tape;
  const auto win = scored_window(batch.x.time(), cfg);
  const int x = tape.leaf(batch.x);
  const int y = tape.leaf(batch.y);
  const int xd =
      draws.mask_enc.size() ? tape.mul_mask(x, draws.mask_enc) : x;
  // mappings always come from the untransformed pair
  const auto enc = cgae::build_mappings(ctx, xd, y);
  const int eta = tape.leaf(draws.eta);

  StepNodes nodes;
  nodes.m = enc.m;
  nodes.ladv = adversarial_mean(ctx, enc.m, enc.ux, eta, win);

  // reconstruction pass on the warped context with fresh dropout
  const int xw = tape.leaf(warp_tensor(batch.x, draws.thetas));
  const int yw = tape.leaf(warp_tensor(batch.y, draws.thetas));
  const int xwd =
      draws.mask_dec.size() ? tape.mul_mask(xw, draws.mask_dec) : xw;
  const int ux_w = cgae::build_u_stack(ctx, xwd);
  nodes.recon = cgae::build_reconstruction(ctx, ux_w, enc.m);

  nodes.lmse = tape.mse(tape.crop_time(nodes.recon, win.t0, win.len),
                        tape.crop_time(yw, win.t0, win.len));
  const int m_scored = tape.crop_time(enc.m, win.t0, win.len);
  nodes.lconst = tape.const_penalty(m_scored);
  nodes.lstd = tape.std_penalty(m_scored);

  const int fit = tape.add(tape.scale(nodes.lmse, cfg.w_mse),
                           tape.scale(nodes.lconst, cfg.w_const));
  nodes.total = tape.sub(tape.add(fit, tape.scale(nodes.lstd, cfg.w_std)),
                         tape.scale(nodes.ladv, cfg.w_adv));
  return nodes;
}

Trainer::Trainer(CgaeModel model, std::vector<signal::SongRecord> corpus,
                 TrainConfig cfg)
    : model_(std::move(model)),
      corpus_(std::move(corpus)),
      cfg_(std::move(cfg)),
      adam_cgae_(cfg_.cgae_opt, model_.params, diffnum::kGroupCgae),
      adam_disc_(cfg_.disc_opt, model_.params, diffnum::kGroupDisc) {
  cfg_.validate();
  check_corpus();
  steps_per_epoch_ =
      cfg_.steps_per_epoch > 0
          ? cfg_.steps_per_epoch
          : static_cast<int>((corpus_.size() + cfg_.batch_size - 1) /
                             static_cast<std::size_t>(cfg_.batch_size));
}

void Trainer::check_corpus() const {
  if (corpus_.empty()) throw std::invalid_argument("train: empty corpus");
  const std::size_t window =
      static_cast<std::size_t>(cfg_.excerpt_len) + 2 * cfg_.margin;
  for (const auto& song : corpus_) {
    if (song.length() < window) {
      throw std::invalid_argument(
          "train: song " + song.id +
          " is shorter than the excerpt window (" + std::to_string(window) +
          " frames)");
    }
  }
}

LossReport Trainer::train_step(int epoch, int step) {
  const auto e = static_cast<std::uint64_t>(epoch);
  const auto s = static_cast<std::uint64_t>(step);
  const std::size_t window =
      static_cast<std::size_t>(cfg_.excerpt_len) + 2 * cfg_.margin;
  const auto B = static_cast<std::size_t>(cfg_.batch_size);

  try {
    Rng excerpt_rng = Rng::substream(cfg_.seed, Stream::kExcerpt, {e, s});
    const auto refs = draw_excerpts(corpus_, cfg_.batch_size, window, excerpt_rng);
    const auto batch = assemble_batch<float>(corpus_, refs, window);

    // step 1: critic update only
    {
      Tape<float> tape;
      GraphContext<float> ctx(tape, model_);
      ctx.disc_requires_grad = true;
      Rng drop = Rng::substream(cfg_.seed, Stream::kDropout, {e, s, 1});
      Rng eta = Rng::substream(cfg_.seed, Stream::kEta, {e, s, 1});
      const auto draws =
          draw_step<float>(model_.spec, B, window, cfg_, false, drop, eta, nullptr);
      const auto nodes = build_step1(ctx, batch, draws, cfg_);
      model_.params.zero_grads();
      tape.backward(nodes.ladv);
      adam_disc_.step();
      if (cfg_.clip_c > 0.0) {
        diffnum::clip_group(model_.params, diffnum::kGroupDisc,
                            static_cast<float>(cfg_.clip_c));
      }
    }

    // step 2: generator update with the critic frozen
    LossReport report;
    report.epoch = epoch;
    report.step = step;
    {
      Tape<float> tape;
      GraphContext<float> ctx(tape, model_);
      ctx.cgae_requires_grad = true;
      Rng drop = Rng::substream(cfg_.seed, Stream::kDropout, {e, s, 2});
      Rng eta = Rng::substream(cfg_.seed, Stream::kEta, {e, s, 2});
      Rng aug = Rng::substream(cfg_.seed, Stream::kAugment, {e, s});
      const auto draws = draw_step<float>(model_.spec, B, window, cfg_, true,
                                          drop, eta, cfg_.augment ? &aug : nullptr);
      const auto nodes = build_step2(ctx, batch, draws, cfg_);
      model_.params.zero_grads();
      tape.backward(nodes.total);
      adam_cgae_.step();
      report.l_mse = static_cast<double>(tape.value(nodes.lmse).scalar_value());
      report.l_advers = static_cast<double>(tape.value(nodes.ladv).scalar_value());
      report.l_const = static_cast<double>(tape.value(nodes.lconst).scalar_value());
      report.l_std = static_cast<double>(tape.value(nodes.lstd).scalar_value());
    }
    return report;
  } catch (const std::exception& ex) {
    throw std::runtime_error("train step " + std::to_string(epoch) + "/" +
                             std::to_string(step) + " aborted: " + ex.what());
  }
}

std::vector<LossReport> Trainer::run() {
  std::vector<LossReport> history;
  for (int epoch = completed_epochs_ + 1; epoch <= cfg_.epochs; ++epoch) {
    for (int step = 0; step < steps_per_epoch_; ++step) {
      history.push_back(train_step(epoch, step));
    }
    completed_epochs_ = epoch;
    if (cfg_.checkpoint_every > 0 && !cfg_.checkpoint_dir.empty() &&
        epoch % cfg_.checkpoint_every == 0) {
      std::filesystem::create_directories(cfg_.checkpoint_dir);
      char name[64];
      std::snprintf(name, sizeof(name), "ckpt-epoch-%04d.ckpt", epoch);
      save_checkpoint((std::filesystem::path(cfg_.checkpoint_dir) / name).string());
    }
  }
  return history;
}

void Trainer::save_checkpoint(const std::string& path) const {
  auto tensors = diffnum::snapshot_store(model_.params);
  const auto append_state = [&](const diffnum::Adam& adam, const char* tag) {
    const auto& idx = adam.indices();
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const auto& name = model_.params.entry(idx[j]).name;
      tensors.push_back({"adam." + std::string(tag) + ".m." + name, "opt_state",
                         adam.moment1()[j]});
      tensors.push_back({"adam." + std::string(tag) + ".v." + name, "opt_state",
                         adam.moment2()[j]});
    }
  };
  append_state(adam_cgae_, "cgae");
  append_state(adam_disc_, "disc");

  nlohmann::json meta = cgae::model_meta(model_.spec);
  meta["model"] = "cgae";
  meta["epoch"] = completed_epochs_;
  meta["adam_cgae_steps"] = adam_cgae_.step_count();
  meta["adam_disc_steps"] = adam_disc_.step_count();
  diffnum::save_checkpoint(path, tensors, meta);
}

Trainer Trainer::resume(const std::string& checkpoint_path,
                        std::vector<signal::SongRecord> corpus,
                        TrainConfig cfg) {
  const auto data = diffnum::load_checkpoint(checkpoint_path);
  CgaeModel model;
  model.spec = cgae::model_spec_from_meta(data.meta);
  Rng dummy(0);
  cgae::detail::init_params(model, dummy);
  for (std::size_t i = 0; i < model.params.count(); ++i) {
    auto& e = model.params.entry(static_cast<int>(i));
    const auto* t = data.find(e.name);
    if (!t || !t->tensor.same_shape(e.value)) {
      throw FormatError("checkpoint: missing or mis-shaped tensor " + e.name);
    }
    e.value = t->tensor;
  }

  Trainer trainer(std::move(model), std::move(corpus), std::move(cfg));
  trainer.completed_epochs_ = data.meta.at("epoch").get<int>();

  const auto restore_state = [&](diffnum::Adam& adam, const char* tag,
                                 std::int64_t steps) {
    std::vector<diffnum::TensorF> m, v;
    for (int idx : adam.indices()) {
      const auto& name = trainer.model_.params.entry(idx).name;
      const auto* tm = data.find("adam." + std::string(tag) + ".m." + name);
      const auto* tv = data.find("adam." + std::string(tag) + ".v." + name);
      if (!tm || !tv) {
        throw FormatError("checkpoint: missing optimizer state for " + name);
      }
      m.push_back(tm->tensor);
      v.push_back(tv->tensor);
    }
    adam.restore(std::move(m), std::move(v), steps);
  };
  restore_state(trainer.adam_cgae_, "cgae",
                data.meta.at("adam_cgae_steps").get<std::int64_t>());
  restore_state(trainer.adam_disc_, "disc",
                data.meta.at("adam_disc_steps").get<std::int64_t>());
  return trainer;
}

void write_history_csv(const std::string& path,
                       const std::vector<LossReport>& history) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write loss history: " + path);
  out << "epoch,step,l_mse,l_advers,l_const,l_std\n";
  out << std::setprecision(17);
  for (const auto& r : history) {
    out << r.epoch << ',' << r.step << ',' << r.l_mse << ',' << r.l_advers
        << ',' << r.l_const << ',' << r.l_std << '\n';
  }
}

// explicit instantiations: float for training, double for gradient checks
template BatchT<float> assemble_batch<float>(
    const std::vector<signal::SongRecord>&, const std::vector<ExcerptRef>&,
    std::size_t);
template BatchT<double> assemble_batch<double>(
    const std::vector<signal::SongRecord>&, const std::vector<ExcerptRef>&,
    std::size_t);
template StepDrawsT<float> draw_step<float>(const cgae::ModelSpec&, std::size_t,
                                            std::size_t, const TrainConfig&,
                                            bool, Rng&, Rng&, Rng*);
template StepDrawsT<double> draw_step<double>(const cgae::ModelSpec&,
                                              std::size_t, std::size_t,
                                              const TrainConfig&, bool, Rng&,
                                              Rng&, Rng*);
template TensorT<float> warp_tensor<float>(
    const TensorT<float>&, const std::vector<signal::AugmentationParams>&);
template TensorT<double> warp_tensor<double>(
    const TensorT<double>&, const std::vector<signal::AugmentationParams>&);
template StepNodes build_step1<float>(GraphContext<float>&, const BatchT<float>&,
                                      const StepDrawsT<float>&,
                                      const TrainConfig&);
template StepNodes build_step1<double>(GraphContext<double>&,
                                       const BatchT<double>&,
                                       const StepDrawsT<double>&,
                                       const TrainConfig&);
template StepNodes build_step2<float>(GraphContext<float>&, const BatchT<float>&,
                                      const StepDrawsT<float>&,
                                      const TrainConfig&);
template StepNodes build_step2<double>(GraphContext<double>&,
                                       const BatchT<double>&,
                                       const StepDrawsT<double>&,
                                       const TrainConfig&);

}  // namespace kickgen::train
