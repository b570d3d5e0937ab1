// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <cmath>
#include <functional>

#include "lasskit/autograd.hpp"
#include "lasskit/rng.hpp"
#include "lasskit/stft.hpp"
#include "support/test_util.hpp"

using namespace lasskit;

TEST_SUITE_BEGIN("autograd");

namespace {

Tensor random_tensor(std::vector<int64_t> shape, uint64_t seed, double lo = -1.0,
                     double hi = 1.0) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (double& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

// Central-difference check of d(dot(w, op(inputs)))/d(inputs[i]) for every
// element of every input, against the tape's backward pass.
double fd_check(const std::vector<Tensor>& inputs,
                const std::function<VarId(Tape&, const std::vector<VarId>&)>& build,
                uint64_t weight_seed = 0xFEED, double eps = 1e-5) {
  // analytic pass
  Tape tape;
  std::vector<VarId> ids;
  for (const auto& t : inputs) ids.push_back(tape.leaf(t));
  VarId out = build(tape, ids);
  Tensor w = random_tensor(tape.val(out).shape, weight_seed);
  VarId loss = tape.dot_const(out, w);
  tape.backward(loss);

  double max_rel = 0.0;
  for (size_t i = 0; i < inputs.size(); ++i) {
    const Tensor& analytic = tape.grad(ids[i]);
    for (int64_t j = 0; j < inputs[i].numel(); ++j) {
      auto eval = [&](double delta) {
        std::vector<Tensor> perturbed = inputs;
        perturbed[i].data[j] += delta;
        Tape t2;
        std::vector<VarId> ids2;
        for (const auto& t : perturbed) ids2.push_back(t2.leaf(t));
        VarId out2 = build(t2, ids2);
        return t2.val(t2.dot_const(out2, w)).data[0];
      };
      const double fd = (eval(eps) - eval(-eps)) / (2.0 * eps);
      const double rel =
          std::abs(analytic.data[j] - fd) / std::max(std::abs(fd), 1e-6);
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

constexpr double kTol = 5e-5;

}  // namespace

TEST_CASE("element-wise op gradients") {
  Tensor x = random_tensor({2, 3}, 1);
  Tensor y = random_tensor({2, 3}, 2);
  CHECK(fd_check({x, y}, [](Tape& t, const std::vector<VarId>& v) {
          return t.add(v[0], v[1]);
        }) < kTol);
  CHECK(fd_check({x}, [](Tape& t, const std::vector<VarId>& v) {
          return t.add_scalar(v[0], 1.7);
        }) < kTol);
  CHECK(fd_check({x}, [](Tape& t, const std::vector<VarId>& v) {
          return t.leaky_relu(v[0], 0.01);
        }) < kTol);
  CHECK(fd_check({x}, [](Tape& t, const std::vector<VarId>& v) {
          return t.relu(v[0]);
        }) < kTol);
  CHECK(fd_check({x}, [](Tape& t, const std::vector<VarId>& v) {
          return t.sigmoid_scale(v[0], 2.0);
        }) < kTol);
}

TEST_CASE("atan2 head gradient away from the origin") {
  Tensor y = random_tensor({8}, 3, 0.3, 1.0);
  Tensor x = random_tensor({8}, 4, 0.3, 1.0);
  CHECK(fd_check({y, x}, [](Tape& t, const std::vector<VarId>& v) {
          return t.atan2v(v[0], v[1]);
        }) < kTol);
}

TEST_CASE("atan2 at the origin has a zero subgradient") {
  Tape t;
  VarId y = t.leaf(Tensor::zeros({2}));
  VarId x = t.leaf(Tensor::zeros({2}));
  VarId z = t.atan2v(y, x);
  Tensor w = Tensor::full({2}, 1.0);
  t.backward(t.dot_const(z, w));
  for (double g : t.grad(y).data) CHECK(g == 0.0);
  for (double g : t.grad(x).data) CHECK(g == 0.0);
  CHECK(t.val(z).data[0] == 0.0);
}

TEST_CASE("dense op gradients") {
  Tensor x = random_tensor({3, 4}, 5);
  Tensor w = random_tensor({6, 4}, 6);
  Tensor b = random_tensor({6}, 7);
  CHECK(fd_check({x, w, b}, [](Tape& t, const std::vector<VarId>& v) {
          return t.linear(v[0], v[1], v[2]);
        }) < kTol);
  Tensor m = random_tensor({2, 10}, 8);
  CHECK(fd_check({m}, [](Tape& t, const std::vector<VarId>& v) {
          return t.slice_cols(v[0], 3, 5);
        }) < kTol);
}

TEST_CASE("normalized embedding lookup gradient") {
  Tensor table = random_tensor({4, 6}, 9, 0.2, 1.0);
  const std::vector<int> rows = {2, 0, 2};  // duplicate rows accumulate
  CHECK(fd_check({table}, [&](Tape& t, const std::vector<VarId>& v) {
          return t.embed_rows_normalized(v[0], rows);
        }) < kTol);
}

TEST_CASE("conv2d gradient, 3x3 same and 1x1") {
  Tensor x = random_tensor({2, 3, 5, 4}, 10);
  Tensor w = random_tensor({4, 3, 3, 3}, 11);
  Tensor b = random_tensor({4}, 12);
  CHECK(fd_check({x, w, b}, [](Tape& t, const std::vector<VarId>& v) {
          return t.conv2d(v[0], v[1], v[2], 1);
        }) < kTol);
  Tensor w1 = random_tensor({2, 3, 1, 1}, 13);
  Tensor b1 = random_tensor({2}, 14);
  CHECK(fd_check({x, w1, b1}, [](Tape& t, const std::vector<VarId>& v) {
          return t.conv2d(v[0], v[1], v[2], 0);
        }) < kTol);
}

TEST_CASE("transposed conv 2x2 gradient") {
  Tensor x = random_tensor({2, 3, 4, 3}, 15);
  Tensor w = random_tensor({3, 5, 2, 2}, 16);
  Tensor b = random_tensor({5}, 17);
  CHECK(fd_check({x, w, b}, [](Tape& t, const std::vector<VarId>& v) {
          return t.tconv2d_2x2(v[0], v[1], v[2]);
        }) < kTol);
}

TEST_CASE("batch norm gradients in both modes") {
  Tensor x = random_tensor({3, 2, 4, 5}, 18);
  Tensor gamma = random_tensor({2}, 19, 0.5, 1.5);
  Tensor beta = random_tensor({2}, 20);
  const Tensor rm = random_tensor({2}, 21, -0.1, 0.1);
  const Tensor rv = random_tensor({2}, 22, 0.5, 1.5);
  for (bool batch_stats : {true, false}) {
    CHECK(fd_check({x, gamma, beta}, [&](Tape& t, const std::vector<VarId>& v) {
            return t.batchnorm(v[0], v[1], v[2], rm, rv, batch_stats, "bn",
                               nullptr);
          }) < kTol);
  }
}

TEST_CASE("batch norm reports batch statistics for the running update") {
  Tensor x = random_tensor({2, 3, 2, 2}, 23);
  Tape t;
  std::vector<BnBatchStats> stats;
  VarId xv = t.constant(x);
  (void)t.batchnorm(xv, t.constant(Tensor::full({3}, 1.0)),
                    t.constant(Tensor::zeros({3})), Tensor::zeros({3}),
                    Tensor::full({3}, 1.0), true, "bn0", &stats);
  REQUIRE(stats.size() == 1);
  CHECK(stats[0].prefix == "bn0");
  // oracle: recompute channel means directly
  for (int64_t c = 0; c < 3; ++c) {
    double acc = 0.0;
    for (int64_t n = 0; n < 2; ++n)
      for (int64_t j = 0; j < 4; ++j) acc += x.data[(n * 3 + c) * 4 + j];
    CHECK(stats[0].mean.data[c] == doctest::Approx(acc / 8.0).epsilon(1e-12));
  }
}

TEST_CASE("film gradient and spatial op gradients") {
  Tensor x = random_tensor({2, 3, 4, 4}, 24);
  Tensor gamma = random_tensor({2, 3}, 25, 0.5, 1.5);
  Tensor beta = random_tensor({2, 3}, 26);
  CHECK(fd_check({x, gamma, beta}, [](Tape& t, const std::vector<VarId>& v) {
          return t.film(v[0], v[1], v[2]);
        }) < kTol);
  CHECK(fd_check({x}, [](Tape& t, const std::vector<VarId>& v) {
          return t.avgpool2x2(v[0]);
        }) < kTol);
  Tensor y = random_tensor({2, 2, 4, 4}, 27);
  CHECK(fd_check({x, y}, [](Tape& t, const std::vector<VarId>& v) {
          return t.concat_channels(v[0], v[1]);
        }) < kTol);
  CHECK(fd_check({x}, [](Tape& t, const std::vector<VarId>& v) {
          return t.pad_hw(v[0], 6, 5);
        }) < kTol);
  CHECK(fd_check({x}, [](Tape& t, const std::vector<VarId>& v) {
          return t.head_layout(v[0], 1, 3, 4);
        }) < kTol);
}

TEST_CASE("polar mask gradient against fixed spectra") {
  StftConfig cfg;
  cfg.window_size = 32;
  cfg.hop_size = 8;
  AudioClip clip = test::white_noise(64, 1000, 28);
  ComplexSpectrogram spec = stft(clip, cfg);
  const int64_t tf = spec.frames * spec.bins;

  Tensor m = random_tensor({1, spec.frames, spec.bins}, 29, 0.2, 1.5);
  Tensor psi = random_tensor({1, spec.frames, spec.bins}, 30, -1.0, 1.0);
  (void)tf;
  CHECK(fd_check({m, psi}, [&](Tape& t, const std::vector<VarId>& v) {
          auto [re, im] = t.polar_mask(v[0], v[1], {&spec});
          return t.add(re, im);  // exercise both outputs
        }) < kTol);
}

TEST_CASE("istft adjoint matches finite differences and the free istft") {
  StftConfig cfg;
  cfg.window_size = 32;
  cfg.hop_size = 8;
  AudioClip clip = test::white_noise(80, 1000, 31);
  ComplexSpectrogram spec = stft(clip, cfg);

  Tensor re({1, spec.frames, spec.bins});
  Tensor im({1, spec.frames, spec.bins});
  for (int64_t t = 0; t < spec.frames; ++t)
    for (int64_t f = 0; f < spec.bins; ++f) {
      re.data[t * spec.bins + f] = spec.at(t, f).real();
      im.data[t * spec.bins + f] = spec.at(t, f).imag();
    }

  // value agrees with the library istft
  {
    Tape t;
    VarId wave = t.istft_wave(t.constant(re), t.constant(im), cfg, 80);
    AudioClip lib = istft(spec);
    const Tensor& w = t.val(wave);
    double max_d = 0.0;
    for (int64_t i = 0; i < w.numel(); ++i)
      max_d = std::max(max_d, std::abs(w.data[i] - lib.samples[size_t(i)]));
    CHECK(max_d < 1e-12);
  }
  // gradient
  CHECK(fd_check({re, im}, [&](Tape& t, const std::vector<VarId>& v) {
          return t.istft_wave(v[0], v[1], cfg, 80);
        }) < kTol);
}

TEST_CASE("L1 loss value and subgradient") {
  Tensor est = random_tensor({1, 40}, 32);
  Tensor ref = random_tensor({1, 40}, 33);
  Tape t;
  VarId e = t.leaf(est);
  VarId loss = t.masked_l1(e, ref, Tensor{});
  // two-line oracle
  double want = 0.0;
  for (int64_t i = 0; i < est.numel(); ++i)
    want += std::abs(est.data[i] - ref.data[i]);
  want /= double(est.numel());
  CHECK(t.val(loss).data[0] == doctest::Approx(want).epsilon(1e-12));

  t.backward(loss);
  const Tensor& g = t.grad(e);
  for (int64_t i = 0; i < est.numel(); ++i) {
    const double d = est.data[i] - ref.data[i];
    const double sign = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
    CHECK(g.data[i] == doctest::Approx(sign / double(est.numel())).epsilon(1e-12));
  }
}

TEST_CASE("masked L1 restricts both value and gradient") {
  Tensor est({1, 4}, {1.0, 2.0, 3.0, 4.0});
  Tensor ref({1, 4}, {0.0, 2.5, 3.0, 0.0});
  Tensor inc({1, 4}, {1.0, 1.0, 0.0, 0.0});
  Tape t;
  VarId e = t.leaf(est);
  VarId loss = t.masked_l1(e, ref, inc);
  CHECK(t.val(loss).data[0] == doctest::Approx((1.0 + 0.5) / 2.0));
  t.backward(loss);
  const Tensor& g = t.grad(e);
  CHECK(g.data[0] == doctest::Approx(0.5));
  CHECK(g.data[1] == doctest::Approx(-0.5));
  CHECK(g.data[2] == 0.0);
  CHECK(g.data[3] == 0.0);
}

TEST_CASE("shape mismatches are rejected") {
  Tape t;
  VarId a = t.leaf(Tensor::zeros({2, 3}));
  VarId b = t.leaf(Tensor::zeros({3, 2}));
  CHECK_THROWS_AS((void)t.add(a, b), Error);
  VarId x = t.leaf(Tensor::zeros({1, 2, 4, 4}));
  VarId w = t.leaf(Tensor::zeros({3, 5, 3, 3}));  // wrong in-channels
  CHECK_THROWS_AS((void)t.conv2d(x, w, t.leaf(Tensor::zeros({3})), 1), Error);
  VarId odd = t.leaf(Tensor::zeros({1, 1, 3, 4}));
  CHECK_THROWS_AS((void)t.avgpool2x2(odd), Error);
}

TEST_SUITE_END();
