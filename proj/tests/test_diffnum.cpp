#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <vector>

#include "kickgen/common/errors.hpp"
#include "kickgen/common/rng.hpp"
#include "kickgen/diffnum/adam.hpp"
#include "kickgen/diffnum/checkpoint.hpp"
#include "kickgen/diffnum/conv.hpp"
#include "kickgen/diffnum/tape.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace kickgen;
using namespace kickgen::diffnum;

namespace {

TensorD make_tensor(std::size_t b, std::size_t c, std::size_t t,
                    std::vector<double> vals) {
  TensorD x(b, c, t);
  REQUIRE(x.size() == vals.size());
  x.data = std::move(vals);
  return x;
}

TensorD random_tensor(std::size_t b, std::size_t c, std::size_t t, Rng& rng) {
  TensorD x(b, c, t);
  for (auto& v : x.data) v = rng.normal();
  return x;
}

double dot(const TensorD& a, const TensorD& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a.data[i] * b.data[i];
  return acc;
}

}  // namespace

TEST_CASE("conv1d matches the direct-summation oracle on frozen examples") {
  ConvSpec spec{1, 1, 2, 1, 1};
  const auto x = make_tensor(1, 1, 4, {1, 2, 3, 4});
  const auto k = make_tensor(1, 1, 2, {1, 10});

  auto y = conv1d_forward(x, k, spec);
  CHECK(y.data == std::vector<double>{1, 12, 23, 34});

  spec.dilation = 2;
  y = conv1d_forward(x, k, spec);
  CHECK(y.data == std::vector<double>{1, 2, 13, 24});
}

TEST_CASE("conv1d identity kernel and zero input") {
  ConvSpec spec{3, 3, 1, 1, 3};
  TensorD k(3, 1, 1);
  k.data = {1, 1, 1};
  Rng rng(7);
  const auto x = random_tensor(2, 3, 11, rng);
  const auto y = conv1d_forward(x, k, spec);
  CHECK(y.data == x.data);

  const TensorD zero(2, 3, 11);
  const auto yz = conv1d_forward(zero, k, spec);
  for (double v : yz.data) CHECK(v == 0.0);
}

TEST_CASE("conv1d equals the oracle on random grouped dilated instances") {
  Rng rng(42);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t groups = 1 + static_cast<std::size_t>(rng.uniform_int(0, 2));
    const std::size_t cg_in = 1 + static_cast<std::size_t>(rng.uniform_int(0, 2));
    const std::size_t cg_out = 1 + static_cast<std::size_t>(rng.uniform_int(0, 2));
    const std::size_t c_in = groups * cg_in, c_out = groups * cg_out;
    const std::size_t r = 1 + static_cast<std::size_t>(rng.uniform_int(0, 2));
    const std::size_t d = 1 + static_cast<std::size_t>(rng.uniform_int(0, 3));
    const std::size_t t_len = 8 + static_cast<std::size_t>(rng.uniform_int(0, 24));
    ConvSpec spec{static_cast<int>(c_in), static_cast<int>(c_out),
                  static_cast<int>(r), static_cast<int>(d),
                  static_cast<int>(groups)};
    const auto x = random_tensor(1, c_in, t_len, rng);
    const auto k = random_tensor(c_out, cg_in, r, rng);
    const auto y = conv1d_forward(x, k, spec);
    const auto want = oracles::conv1d_direct(x.data, c_in, t_len, k.data, c_out,
                                             r, d, groups);
    for (std::size_t i = 0; i < want.size(); ++i) {
      CHECK(y.data[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("conv1d_transposed is the exact adjoint over 100 random instances") {
  Rng rng(1234);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t groups = 1 + static_cast<std::size_t>(rng.uniform_int(0, 3));
    const std::size_t cg_in = 1 + static_cast<std::size_t>(rng.uniform_int(0, 2));
    const std::size_t cg_out = 1 + static_cast<std::size_t>(rng.uniform_int(0, 2));
    const std::size_t r = 1 + static_cast<std::size_t>(rng.uniform_int(0, 2));
    const std::size_t d = 1 + static_cast<std::size_t>(rng.uniform_int(0, 7));
    const std::size_t t_len = 4 + static_cast<std::size_t>(rng.uniform_int(0, 28));
    ConvSpec spec{static_cast<int>(groups * cg_in),
                  static_cast<int>(groups * cg_out), static_cast<int>(r),
                  static_cast<int>(d), static_cast<int>(groups)};
    const auto x = random_tensor(1, groups * cg_in, t_len, rng);
    const auto y = random_tensor(1, groups * cg_out, t_len, rng);
    const auto k = random_tensor(groups * cg_out, cg_in, r, rng);
    const double lhs = dot(conv1d_forward(x, k, spec), y);
    const double rhs = dot(x, conv1d_adjoint(y, k, spec));
    CHECK(std::abs(lhs - rhs) <= 1e-9);
  }
}

TEST_CASE("conv1d_transposed with R=1 is the channel-transposed conv") {
  ConvSpec spec{2, 3, 1, 1, 1};
  Rng rng(5);
  const auto k = random_tensor(3, 2, 1, rng);
  const auto y = random_tensor(1, 3, 6, rng);
  const auto x = conv1d_adjoint(y, k, spec);
  // transposed channel matrix applied pointwise
  for (std::size_t t = 0; t < 6; ++t) {
    for (std::size_t ci = 0; ci < 2; ++ci) {
      double want = 0.0;
      for (std::size_t co = 0; co < 3; ++co) {
        want += k.at(co, ci, 0) * y.at(0, co, t);
      }
      CHECK(x.at(0, ci, t) == doctest::Approx(want).epsilon(1e-12));
    }
  }

  const TensorD zero(1, 3, 6);
  for (double v : conv1d_adjoint(zero, k, spec).data) CHECK(v == 0.0);
}

TEST_CASE("conv1d is linear and shift-equivariant") {
  Rng rng(99);
  ConvSpec spec{2, 4, 2, 4, 2};
  const auto k = random_tensor(4, 1, 2, rng);
  const auto x1 = random_tensor(1, 2, 40, rng);
  const auto x2 = random_tensor(1, 2, 40, rng);
  const double a = 0.7, b = -1.3;

  TensorD mix(1, 2, 40);
  for (std::size_t i = 0; i < mix.size(); ++i) {
    mix.data[i] = a * x1.data[i] + b * x2.data[i];
  }
  const auto y_mix = conv1d_forward(mix, k, spec);
  const auto y1 = conv1d_forward(x1, k, spec);
  const auto y2 = conv1d_forward(x2, k, spec);
  for (std::size_t i = 0; i < y_mix.size(); ++i) {
    CHECK(y_mix.data[i] ==
          doctest::Approx(a * y1.data[i] + b * y2.data[i]).epsilon(1e-12));
  }

  // shift input by s: outputs shift by s for t >= s + (R-1)*d
  const std::size_t s = 3;
  TensorD shifted(1, 2, 40);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t t = s; t < 40; ++t) {
      shifted.at(0, c, t) = x1.at(0, c, t - s);
    }
  }
  const auto y_shifted = conv1d_forward(shifted, k, spec);
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t t = s + 4; t < 40; ++t) {
      CHECK(y_shifted.at(0, c, t) == y1.at(0, c, t - s));
    }
  }
}

TEST_CASE("selu values and properties") {
  Tape<double> tape;
  const int x = tape.leaf(make_tensor(1, 1, 3, {0.0, 1.0, -30.0}));
  const auto& y = tape.value(tape.selu(x));
  CHECK(y.data[0] == 0.0);
  CHECK(y.data[1] == doctest::Approx(1.0507009873554805).epsilon(1e-12));
  CHECK(y.data[2] == doctest::Approx(-1.7580993408473766).epsilon(1e-6));

  // monotone and continuous at 0
  double prev = selu_scalar(-8.0);
  for (double v = -7.9; v < 8.0; v += 0.1) {
    const double cur = selu_scalar(v);
    CHECK(cur > prev);
    prev = cur;
  }
  CHECK(std::abs(selu_scalar(1e-12) - selu_scalar(-1e-12)) < 1e-11);
}

TEST_CASE("dropout contract") {
  Rng rng(3);
  Tape<double> tape;
  const auto ones = [&] {
    TensorD t(1, 1, 100000);
    for (auto& v : t.data) v = 1.0;
    return t;
  }();
  const int x = tape.leaf(ones);

  CHECK(tape.dropout(x, 0.0, rng, true) == x);    // p = 0: identity node
  CHECK(tape.dropout(x, 0.9, rng, false) == x);   // inference: identity

  const int dropped = tape.dropout(x, 0.5, rng, true);
  double mean = 0.0;
  int zeros = 0;
  for (double v : tape.value(dropped).data) {
    mean += v;
    if (v == 0.0) ++zeros;
    else CHECK(v == doctest::Approx(2.0));
  }
  mean /= static_cast<double>(tape.value(dropped).size());
  CHECK(mean > 0.97);
  CHECK(mean < 1.03);
  CHECK(zeros > 45000);
  CHECK(zeros < 55000);

  CHECK_THROWS_AS(tape.dropout(x, 1.0, rng, true), std::invalid_argument);
}

TEST_CASE("backward matches finite differences for a conv energy loss") {
  Rng rng(11);
  const ConvSpec spec{2, 3, 2, 2, 1};
  const auto x_val = random_tensor(1, 2, 8, rng);
  const auto k_val = random_tensor(3, 2, 2, rng);

  ParamStoreT<double> store;
  store.add("k", kGroupCgae, k_val);

  const auto eval = [&]() {
    Tape<double> tape;
    const int x = tape.leaf(x_val);
    const int k = tape.param(store, 0, false);
    const int y = tape.conv1d(x, k, spec);
    const int zero = tape.leaf(TensorD::zeros_like(tape.value(y)));
    // sum of squares = mse * numel
    return tape.value(tape.scale(tape.mse(y, zero),
                                 static_cast<double>(tape.value(y).size())))
        .scalar_value();
  };

  store.zero_grads();
  {
    Tape<double> tape;
    const int x = tape.leaf(x_val);
    const int k = tape.param(store, 0, true);
    const int y = tape.conv1d(x, k, spec);
    const int zero = tape.leaf(TensorD::zeros_like(tape.value(y)));
    const int loss = tape.scale(tape.mse(y, zero),
                                static_cast<double>(tape.value(y).size()));
    tape.backward(loss);
  }
  const auto report = gradcheck::check_against_fd(
      store, {store.entry(0).grad}, eval, 1e-5);
  CHECK(report.max_rel_err < 1e-4);
  CHECK(report.checked == k_val.size());
}

TEST_CASE("gradient is exactly zero for an unused parameter") {
  Rng rng(13);
  ParamStoreT<double> store;
  store.add("used", kGroupCgae, random_tensor(2, 2, 1, rng));
  store.add("unused", kGroupCgae, random_tensor(2, 2, 1, rng));
  store.zero_grads();

  Tape<double> tape;
  const int x = tape.leaf(random_tensor(1, 2, 6, rng));
  const int k = tape.param(store, 0, true);
  (void)tape.param(store, 1, true);  // on the tape but not in the graph
  const ConvSpec spec{2, 2, 1, 1, 1};
  const int y = tape.conv1d(x, k, spec);
  const int zero = tape.leaf(TensorD::zeros_like(tape.value(y)));
  tape.backward(tape.mse(y, zero));

  for (double g : store.entry(1).grad.data) CHECK(g == 0.0);
  bool any = false;
  for (double g : store.entry(0).grad.data) any |= (g != 0.0);
  CHECK(any);
}

TEST_CASE("backward on a gated encoder/decoder graph with every op") {
  // miniature gated stack: U {4,4,8} over M=2 inputs, V the same from one
  // channel, W {4,2}, tied adjoint decoding, all four loss styles.
  // The seed is chosen so no SELU pre-activation sits within the FD step of
  // the kink at zero, where central differences are meaningless.
  Rng rng(21);
  const std::size_t t_len = 24;
  const std::vector<ConvSpec> u_specs = {{2, 4, 2, 1, 2}, {4, 4, 2, 2, 2}, {4, 8, 2, 4, 1}};
  const std::vector<ConvSpec> v_specs = {{1, 4, 2, 1, 1}, {4, 4, 2, 2, 1}, {4, 8, 2, 4, 1}};
  const std::vector<ConvSpec> w_specs = {{8, 4, 1, 1, 1}, {4, 2, 1, 1, 1}};

  ParamStoreT<double> store;
  int next = 0;
  const auto add_specs = [&](const char* prefix,
                             const std::vector<ConvSpec>& specs) {
    for (std::size_t i = 0; i < specs.size(); ++i) {
      TensorD k(static_cast<std::size_t>(specs[i].out_channels),
                static_cast<std::size_t>(specs[i].in_per_group()),
                static_cast<std::size_t>(specs[i].kernel_size));
      for (auto& v : k.data) v = 0.5 * rng.normal();
      store.add(std::string(prefix) + std::to_string(i), kGroupCgae,
                std::move(k));
      ++next;
    }
  };
  add_specs("u", u_specs);
  add_specs("v", v_specs);
  add_specs("w", w_specs);
  REQUIRE(next == 8);

  const auto x_val = random_tensor(2, 2, t_len, rng);
  const auto y_val = random_tensor(2, 1, t_len, rng);
  Rng mask_rng(23);
  const auto mask = make_dropout_mask<double>({2, 2, t_len}, 0.5, mask_rng);

  const auto build = [&](bool with_grad, Tape<double>& tape) {
    std::vector<int> params;
    for (int i = 0; i < 8; ++i) params.push_back(tape.param(store, i, with_grad));
    const int x = tape.mul_mask(tape.leaf(x_val), mask);
    const int y = tape.leaf(y_val);

    const auto stack = [&](int in, const std::vector<ConvSpec>& specs,
                           int base) {
      int id = in;
      for (std::size_t i = 0; i < specs.size(); ++i) {
        id = tape.conv1d(id, params[static_cast<std::size_t>(base) + i], specs[i]);
        if (i + 1 < specs.size()) id = tape.selu(id);
      }
      return id;
    };
    const auto stack_adj = [&](int in, const std::vector<ConvSpec>& specs,
                               int base) {
      int id = in;
      for (std::size_t i = specs.size(); i-- > 0;) {
        id = tape.conv1d_transposed(
            id, params[static_cast<std::size_t>(base) + i], specs[i]);
        if (i > 0) id = tape.selu(id);
      }
      return id;
    };

    const int ux = stack(x, u_specs, 0);
    const int vy = stack(y, v_specs, 3);
    const int m = stack(tape.hadamard(ux, vy), w_specs, 6);
    const int recon = stack_adj(tape.hadamard(ux, stack_adj(m, w_specs, 6)),
                                v_specs, 3);
    const int joint = tape.concat_channels(ux, m);
    const int cropped_m = tape.crop_time(m, 2, t_len - 4);

    const int lmse = tape.mse(tape.crop_time(recon, 2, t_len - 4),
                              tape.crop_time(y, 2, t_len - 4));
    const int lconst = tape.const_penalty(cropped_m);
    const int lstd = tape.std_penalty(cropped_m);
    const int lmean = tape.mean_all(tape.crop_time(joint, 1, t_len - 2));
    return tape.sub(tape.add(tape.add(lmse, tape.scale(lconst, 0.5)), lstd),
                    tape.scale(lmean, 0.25));
  };

  store.zero_grads();
  {
    Tape<double> tape;
    tape.backward(build(true, tape));
  }
  std::vector<TensorD> analytic;
  for (int i = 0; i < 8; ++i) analytic.push_back(store.entry(i).grad);

  const auto eval = [&]() {
    Tape<double> tape;
    return tape.value(build(false, tape)).scalar_value();
  };
  const auto report = gradcheck::check_against_fd(store, analytic, eval, 1e-5);
  CAPTURE(report.worst_param);
  CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("backward rejects non-scalar roots") {
  Tape<double> tape;
  const int x = tape.leaf(make_tensor(1, 1, 3, {1, 2, 3}), true);
  CHECK_THROWS_WITH_AS(tape.backward(x), doctest::Contains("scalar-rooted"),
                       std::invalid_argument);
}

TEST_CASE("adam zero gradient leaves fresh parameters unchanged") {
  ParamStore store;
  TensorF v(1, 1, 3);
  v.data = {1.0f, -2.0f, 3.0f};
  store.add("p", kGroupCgae, v);
  store.zero_grads();
  Adam adam({1e-2, 0.9, 0.999, 1e-8}, store, kGroupCgae);
  adam.step();
  CHECK(store.entry(0).value.data == std::vector<float>{1.0f, -2.0f, 3.0f});
  CHECK(adam.step_count() == 1);
}

TEST_CASE("adam follows the hand-rolled recurrence on a scalar") {
  const AdamConfig cfg{1e-3, 0.5, 0.9, 1e-8};
  ParamStore store;
  store.add("p", kGroupCgae, TensorF::scalar(0.3f));
  Adam adam(cfg, store, kGroupCgae);

  const std::vector<double> grads = {1.0, -0.5, 2.0, 0.0, 3.0};
  double p = 0.3, m = 0.0, v = 0.0;
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    store.entry(0).grad.data[0] = static_cast<float>(grads[t - 1]);
    adam.step();

    const double g = grads[t - 1];
    m = cfg.beta1 * m + (1 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1 - cfg.beta2) * g * g;
    const double mhat = m / (1 - std::pow(cfg.beta1, static_cast<double>(t)));
    const double vhat = v / (1 - std::pow(cfg.beta2, static_cast<double>(t)));
    p -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    CHECK(store.entry(0).value.data[0] == doctest::Approx(p).epsilon(1e-6));
  }
}

TEST_CASE("adam only updates its own group and is bitwise deterministic") {
  const auto run = [] {
    ParamStore store;
    store.add("c", kGroupCgae, TensorF::scalar(1.0f));
    store.add("d", kGroupDisc, TensorF::scalar(1.0f));
    Adam adam({1e-2, 0.5, 0.9, 1e-8}, store, kGroupCgae);
    for (int i = 0; i < 5; ++i) {
      store.entry(0).grad.data[0] = 0.25f * static_cast<float>(i + 1);
      store.entry(1).grad.data[0] = 9.0f;  // must be ignored
      adam.step();
    }
    return std::pair{store.entry(0).value.data[0], store.entry(1).value.data[0]};
  };
  const auto [c1, d1] = run();
  const auto [c2, d2] = run();
  CHECK(c1 == c2);
  CHECK(d1 == 1.0f);
  CHECK(d2 == 1.0f);
  CHECK(c1 != 1.0f);
}

TEST_CASE("adam rejects non-finite gradients with the tensor name") {
  ParamStore store;
  store.add("w.3", kGroupCgae, TensorF::scalar(1.0f));
  Adam adam({}, store, kGroupCgae);
  store.entry(0).grad.data[0] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_WITH_AS(adam.step(), doctest::Contains("w.3"),
                       std::runtime_error);
}

TEST_CASE("weight clipping clamps a group") {
  ParamStore store;
  TensorF v(1, 1, 4);
  v.data = {0.2f, -0.3f, 0.01f, 0.05f};
  store.add("d", kGroupDisc, v);
  clip_group(store, kGroupDisc, 0.05f);
  CHECK(store.entry(0).value.data == std::vector<float>{0.05f, -0.05f, 0.01f, 0.05f});
}

TEST_CASE("checkpoint round trip and validation") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "kickgen_ckpt_test";
  fs::create_directories(dir);
  const auto path = (dir / "test.ckpt").string();

  Rng rng(5);
  std::vector<NamedTensor> tensors;
  TensorF a(2, 3, 4), b(1, 1, 7);
  for (auto& x : a.data) x = static_cast<float>(rng.normal());
  for (auto& x : b.data) x = static_cast<float>(rng.normal());
  tensors.push_back({"a", "cgae", a});
  tensors.push_back({"b", "discriminator", b});
  save_checkpoint(path, tensors, {{"epoch", 3}});

  const auto loaded = load_checkpoint(path);
  CHECK(loaded.meta.at("epoch").get<int>() == 3);
  REQUIRE(loaded.tensors.size() == 2);
  CHECK(loaded.tensors[0].name == "a");
  CHECK(loaded.tensors[0].group == "cgae");
  CHECK(loaded.tensors[0].tensor.data == a.data);
  CHECK(loaded.tensors[1].tensor.data == b.data);

  // truncated payload
  {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    std::ofstream out(path + ".trunc", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 8));
  }
  CHECK_THROWS_AS(load_checkpoint(path + ".trunc"), FormatError);

  // bad header
  {
    std::ofstream out(path + ".bad", std::ios::binary);
    out.write("\x04\x00\x00\x00junk", 8);
  }
  CHECK_THROWS_AS(load_checkpoint(path + ".bad"), FormatError);
}

TEST_CASE("param store rejects duplicate names") {
  ParamStore store;
  store.add("x", kGroupCgae, TensorF::scalar(1.0f));
  CHECK_THROWS_AS(store.add("x", kGroupDisc, TensorF::scalar(2.0f)),
                  std::invalid_argument);
}
