#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "kickgen/common/errors.hpp"
#include "kickgen/common/hash.hpp"
#include "kickgen/common/rng.hpp"
#include "kickgen/signal/corpus.hpp"
#include "kickgen/train/losses.hpp"
#include "kickgen/train/trainer.hpp"

using namespace kickgen;
using namespace kickgen::train;
using cgae::MappingCodes;
using diffnum::TensorF;

namespace {

MappingCodes codes_from(std::vector<double> values, std::size_t q,
                        std::size_t t) {
  MappingCodes m(q, t);
  m.values = std::move(values);
  return m;
}

signal::OnsetCurve curve(std::vector<double> values) {
  signal::OnsetCurve c;
  c.frame_rate = signal::kDefaultFrameRate;
  c.values = std::move(values);
  return c;
}

cgae::CgaeModel eighth_model(std::uint64_t seed = 1) {
  Rng rng = Rng::substream(seed, Stream::kInit);
  return cgae::make_model<float>(cgae::ModelSpec::make(0.125), rng);
}

std::vector<signal::SongRecord> toy_corpus(int songs = 4, int bars = 4,
                                           std::uint64_t seed = 7) {
  signal::CorpusConfig cfg;
  cfg.n_songs = songs;
  cfg.bars = bars;
  cfg.tempo_min = 110.0;
  cfg.tempo_max = 130.0;
  return signal::generate_corpus(cfg, seed);
}

TrainConfig toy_config() {
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.excerpt_len = 256;
  cfg.margin = 150;
  cfg.epochs = 0;
  cfg.seed = 5;
  return cfg;
}

std::uint64_t hash_group(const cgae::CgaeModel& model, const char* group) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (int i : model.params.group_indices(group)) {
    const auto& d = model.params.entry(i).value.data;
    h = fnv1a64_span(d.data(), d.size(), h);
  }
  return h;
}

}  // namespace

TEST_CASE("loss_mse basics and oracle") {
  CHECK(loss_mse(curve({1, 2, 3}), curve({1, 2, 3})) == 0.0);
  CHECK(loss_mse(curve({0, 2}), curve({0, 0})) == doctest::Approx(2.0));

  Rng rng(3);
  std::vector<double> a(97), b(97);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = rng.normal();
    b[i] = rng.normal();
  }
  double want = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) want += (a[i] - b[i]) * (a[i] - b[i]);
  want /= static_cast<double>(a.size());
  CHECK(loss_mse(curve(a), curve(b)) == doctest::Approx(want).epsilon(1e-12));

  CHECK_THROWS_AS(loss_mse(curve({1}), curve({1, 2})), std::invalid_argument);
}

TEST_CASE("loss_const on frozen examples") {
  CHECK(loss_const(codes_from({1, 1, 1, 1}, 1, 4)) == 0.0);
  CHECK(loss_const(codes_from({0, 2, 0}, 1, 3)) ==
        doctest::Approx(8.0 / 3.0).epsilon(1e-12));

  // doubling multiplies the loss by 4
  Rng rng(4);
  MappingCodes m(3, 20);
  for (auto& v : m.values) v = rng.normal();
  auto doubled = m;
  for (auto& v : doubled.values) v *= 2.0;
  CHECK(loss_const(doubled) ==
        doctest::Approx(4.0 * loss_const(m)).epsilon(1e-12));

  CHECK_THROWS_AS(loss_const(codes_from({1}, 1, 1)), std::invalid_argument);
}

TEST_CASE("loss_std on frozen examples and against the two-pass oracle") {
  CHECK_THROWS_AS(loss_std({}), std::invalid_argument);

  const auto pm = codes_from({-1, 1}, 1, 2);
  std::vector<const MappingCodes*> batch{&pm};
  CHECK(loss_std(batch) == doctest::Approx(0.0).scale(1.0));

  const auto zeros = codes_from({0, 0, 0, 0, 0, 0}, 2, 3);
  batch = {&zeros};
  CHECK(loss_std(batch) == doctest::Approx(1.0).epsilon(1e-12));

  Rng rng(5);
  MappingCodes m1(4, 13), m2(4, 9);
  for (auto& v : m1.values) v = 2.0 * rng.normal() + 0.3;
  for (auto& v : m2.values) v = 2.0 * rng.normal() + 0.3;
  batch = {&m1, &m2};
  double total = 0.0;
  for (std::size_t q = 0; q < 4; ++q) {
    std::vector<double> obs;
    for (std::size_t t = 0; t < m1.t; ++t) obs.push_back(m1.at(q, t));
    for (std::size_t t = 0; t < m2.t; ++t) obs.push_back(m2.at(q, t));
    double mu = 0.0;
    for (double v : obs) mu += v;
    mu /= static_cast<double>(obs.size());
    double var = 0.0;
    for (double v : obs) var += (v - mu) * (v - mu);
    var /= static_cast<double>(obs.size());
    total += (var - 1.0) * (var - 1.0) + mu * mu;
  }
  CHECK(loss_std(batch) == doctest::Approx(total / 4.0).epsilon(1e-10));
}

TEST_CASE("loss_advers frozen cases and direct evaluation") {
  auto model = eighth_model();
  Rng rng(6);
  signal::ContextBundle x;
  for (auto& ch : x.channels) {
    ch.frame_rate = signal::kDefaultFrameRate;
    ch.values.resize(48);
    for (auto& v : ch.values) v = rng.normal();
  }
  const auto ux = cgae::encode_context(model, x);
  Rng crng(7);
  const auto m = cgae::sample_codes(16, 48, crng);
  const auto eta = cgae::sample_codes(16, 48, crng);

  // m == eta cancels exactly
  CHECK(loss_advers(model, m, m, ux) == 0.0);

  // matches the direct (1/T) sum of per-step critic differences
  const auto sm = cgae::discriminate(model, m, ux);
  const auto se = cgae::discriminate(model, eta, ux);
  double want = 0.0;
  for (std::size_t t = 0; t < sm.size(); ++t) want += sm[t] - se[t];
  want /= static_cast<double>(sm.size());
  CHECK(loss_advers(model, m, eta, ux) == doctest::Approx(want).epsilon(1e-12));

  // a zero-weight critic is constant: loss 0
  for (std::size_t i = 0; i < 5; ++i) {
    auto& e = model.params.entry("disc." + std::to_string(i));
    std::fill(e.value.data.begin(), e.value.data.end(), 0.0f);
  }
  CHECK(loss_advers(model, m, eta, ux) == 0.0);
}

TEST_CASE("sample_augmentation draws stay in bounds with the right stats") {
  Rng rng(8);
  double shift_mean = 0.0, scale_mean = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto p = sample_augmentation(rng);
    CHECK(p.shift >= -150);
    CHECK(p.shift <= 150);
    CHECK(p.scale >= 0.8);
    CHECK(p.scale <= 1.2);
    shift_mean += p.shift;
    scale_mean += p.scale;
  }
  shift_mean /= n;
  scale_mean /= n;
  CHECK(shift_mean > -2.0);
  CHECK(shift_mean < 2.0);
  CHECK(scale_mean > 0.995);
  CHECK(scale_mean < 1.005);

  Rng a(9), b(9);
  for (int i = 0; i < 10; ++i) {
    const auto pa = sample_augmentation(a);
    const auto pb = sample_augmentation(b);
    CHECK(pa.shift == pb.shift);
    CHECK(pa.scale == pb.scale);
  }
}

TEST_CASE("warp_tensor matches the curve-level warp per channel") {
  Rng rng(10);
  TensorF x(2, 3, 40);
  for (auto& v : x.data) v = static_cast<float>(rng.normal());
  const std::vector<signal::AugmentationParams> thetas = {{7, 0.9}, {-3, 1.15}};
  const auto warped = warp_tensor(x, thetas);
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t c = 0; c < 3; ++c) {
      signal::OnsetCurve ch;
      ch.frame_rate = 100.0;
      ch.values.assign(x.row(b, c), x.row(b, c) + 40);
      const auto want = signal::apply_time_warp(ch, thetas[b]);
      for (std::size_t t = 0; t < 40; ++t) {
        CHECK(warped.at(b, c, t) ==
              doctest::Approx(want.values[t]).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("two identically-seeded runs produce identical loss reports") {
  const auto corpus = toy_corpus();
  auto cfg = toy_config();
  const auto run = [&] {
    Trainer trainer(eighth_model(11), corpus, cfg);
    std::vector<LossReport> reports;
    for (int s = 0; s < 10; ++s) reports.push_back(trainer.train_step(1, s));
    return reports;
  };
  const auto a = run();
  const auto b = run();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].l_mse == b[i].l_mse);
    CHECK(a[i].l_advers == b[i].l_advers);
    CHECK(a[i].l_const == b[i].l_const);
    CHECK(a[i].l_std == b[i].l_std);
  }
}

TEST_CASE("plain reconstruction training decreases the mse loss") {
  const auto corpus = toy_corpus();
  auto cfg = toy_config();
  cfg.w_const = cfg.w_std = cfg.w_adv = 0.0;
  cfg.augment = false;
  cfg.dropout_p = 0.0;
  cfg.cgae_opt.lr = 1e-3;
  Trainer trainer(eighth_model(12), corpus, cfg);

  std::vector<double> mse;
  for (int s = 0; s < 50; ++s) mse.push_back(trainer.train_step(1, s).l_mse);
  const auto window_mean = [&](std::size_t begin) {
    double acc = 0.0;
    for (std::size_t i = begin; i < begin + 10; ++i) acc += mse[i];
    return acc / 10.0;
  };
  CHECK(window_mean(40) < window_mean(0));
  for (double v : mse) CHECK(std::isfinite(v));
}

TEST_CASE("critic weights stay inside the clip box after every step") {
  const auto corpus = toy_corpus();
  auto cfg = toy_config();
  cfg.clip_c = 0.05;
  Trainer trainer(eighth_model(13), corpus, cfg);
  for (int s = 0; s < 5; ++s) {
    trainer.train_step(1, s);
    for (int i : trainer.model().params.group_indices(diffnum::kGroupDisc)) {
      for (float w : trainer.model().params.entry(i).value.data) {
        CHECK(std::abs(w) <= 0.05f);
      }
    }
  }
}

TEST_CASE("step 1 moves only the critic; step 2 moves only the generator") {
  const auto corpus = toy_corpus();
  auto cfg = toy_config();
  auto model = eighth_model(14);

  // gradient isolation on the graphs themselves
  const std::size_t window =
      static_cast<std::size_t>(cfg.excerpt_len) + 2 * cfg.margin;
  Rng ex(1);
  const auto refs = draw_excerpts(corpus, cfg.batch_size, window, ex);
  const auto batch = assemble_batch<float>(corpus, refs, window);
  Rng drop(2), eta(3), aug(4);

  {
    diffnum::Tape<float> tape;
    cgae::GraphContext<float> ctx(tape, model);
    ctx.disc_requires_grad = true;  // step-1 setup
    const auto draws =
        draw_step<float>(model.spec, 4, window, cfg, false, drop, eta, nullptr);
    const auto nodes = build_step1(ctx, batch, draws, cfg);
    model.params.zero_grads();
    tape.backward(nodes.ladv);
    for (int i : model.params.group_indices(diffnum::kGroupCgae)) {
      for (float g : model.params.entry(i).grad.data) CHECK(g == 0.0f);
    }
    bool any = false;
    for (int i : model.params.group_indices(diffnum::kGroupDisc)) {
      for (float g : model.params.entry(i).grad.data) any |= (g != 0.0f);
    }
    CHECK(any);
  }
  {
    diffnum::Tape<float> tape;
    cgae::GraphContext<float> ctx(tape, model);
    ctx.cgae_requires_grad = true;  // step-2 setup
    const auto draws =
        draw_step<float>(model.spec, 4, window, cfg, true, drop, eta, &aug);
    const auto nodes = build_step2(ctx, batch, draws, cfg);
    model.params.zero_grads();
    tape.backward(nodes.total);
    for (int i : model.params.group_indices(diffnum::kGroupDisc)) {
      for (float g : model.params.entry(i).grad.data) CHECK(g == 0.0f);
    }
    bool any = false;
    for (int i : model.params.group_indices(diffnum::kGroupCgae)) {
      for (float g : model.params.entry(i).grad.data) any |= (g != 0.0f);
    }
    CHECK(any);
  }

  // and through the optimizer: a full step only moves the expected groups
  Trainer trainer(eighth_model(14), corpus, cfg);
  const auto cgae_before = hash_group(trainer.model(), diffnum::kGroupCgae);
  const auto disc_before = hash_group(trainer.model(), diffnum::kGroupDisc);
  trainer.train_step(1, 0);
  CHECK(hash_group(trainer.model(), diffnum::kGroupCgae) != cgae_before);
  CHECK(hash_group(trainer.model(), diffnum::kGroupDisc) != disc_before);
}

TEST_CASE("step 2 codes come from the untransformed pair") {
  const auto corpus = toy_corpus();
  auto cfg = toy_config();
  cfg.dropout_p = 0.0;  // make the encoder pass reproducible outside the step
  auto model = eighth_model(15);

  const std::size_t window =
      static_cast<std::size_t>(cfg.excerpt_len) + 2 * cfg.margin;
  Rng ex(21);
  const auto refs = draw_excerpts(corpus, cfg.batch_size, window, ex);
  const auto batch = assemble_batch<float>(corpus, refs, window);
  Rng drop(22), eta(23), aug(24);
  const auto draws =
      draw_step<float>(model.spec, 4, window, cfg, true, drop, eta, &aug);

  diffnum::Tape<float> tape;
  cgae::GraphContext<float> ctx(tape, model);
  const auto nodes = build_step2(ctx, batch, draws, cfg);

  // recompute the mappings from the raw (x, y) pair: bitwise identical
  diffnum::Tape<float> check;
  cgae::GraphContext<float> cctx(check, model);
  const auto enc = cgae::build_mappings(cctx, check.leaf(batch.x),
                                        check.leaf(batch.y));
  CHECK(tape.value(nodes.m).data == check.value(enc.m).data);

  // and the reconstruction pass used the warped context with those codes
  const auto warped = warp_tensor(batch.x, draws.thetas);
  diffnum::Tape<float> check2;
  cgae::GraphContext<float> cctx2(check2, model);
  const int ux_w = cgae::build_u_stack(cctx2, check2.leaf(warped));
  const int recon = cgae::build_reconstruction(
      cctx2, ux_w, check2.leaf(tape.value(nodes.m)));
  CHECK(tape.value(nodes.recon).data == check2.value(recon).data);
}

TEST_CASE("training rejects a corpus shorter than the excerpt window") {
  const auto corpus = toy_corpus(2, 2);  // ~345 frames per song
  auto cfg = toy_config();               // window 556
  CHECK_THROWS_WITH_AS(Trainer(eighth_model(16), corpus, cfg),
                       doctest::Contains("shorter than the excerpt window"),
                       std::invalid_argument);
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  cfg.margin = 100;  // cannot cover 150-frame shifts
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.margin = 150;
  cfg.dropout_p = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("zero-epoch training returns the initialized model unchanged") {
  const auto corpus = toy_corpus();
  auto cfg = toy_config();
  cfg.epochs = 0;
  auto model = eighth_model(17);
  const auto before = hash_group(model, diffnum::kGroupCgae);
  Trainer trainer(std::move(model), corpus, cfg);
  const auto history = trainer.run();
  CHECK(history.empty());
  CHECK(hash_group(trainer.model(), diffnum::kGroupCgae) == before);
}

TEST_CASE("resuming from a checkpoint replays the uninterrupted run") {
  namespace fs = std::filesystem;
  const auto corpus = toy_corpus();
  auto cfg = toy_config();
  cfg.epochs = 3;
  cfg.steps_per_epoch = 2;

  // uninterrupted: 3 epochs
  Trainer full(eighth_model(18), corpus, cfg);
  const auto full_history = full.run();
  REQUIRE(full_history.size() == 6);

  // interrupted after epoch 2, checkpointed, resumed
  auto cfg2 = cfg;
  cfg2.epochs = 2;
  Trainer partial(eighth_model(18), corpus, cfg2);
  partial.run();
  const auto ckpt =
      (fs::temp_directory_path() / "kickgen_resume_test.ckpt").string();
  partial.save_checkpoint(ckpt);

  Trainer resumed = Trainer::resume(ckpt, corpus, cfg);
  CHECK(resumed.completed_epochs() == 2);
  const auto tail = resumed.run();
  REQUIRE(tail.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(tail[i].epoch == full_history[4 + i].epoch);
    CHECK(tail[i].l_mse == full_history[4 + i].l_mse);
    CHECK(tail[i].l_advers == full_history[4 + i].l_advers);
    CHECK(tail[i].l_const == full_history[4 + i].l_const);
    CHECK(tail[i].l_std == full_history[4 + i].l_std);
  }

  // the final models agree bitwise
  CHECK(hash_group(resumed.model(), diffnum::kGroupCgae) ==
        hash_group(full.model(), diffnum::kGroupCgae));
  CHECK(hash_group(resumed.model(), diffnum::kGroupDisc) ==
        hash_group(full.model(), diffnum::kGroupDisc));
}
