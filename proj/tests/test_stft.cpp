// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <cmath>

#include "lasskit/common.hpp"
#include "lasskit/fft.hpp"
#include "lasskit/metrics.hpp"
#include "lasskit/mixing.hpp"
#include "lasskit/stft.hpp"
#include "lasskit/synth.hpp"
#include "support/test_util.hpp"

using namespace lasskit;

TEST_SUITE_BEGIN("stft");

namespace {

const StftConfig kDefault{};  // 1024 / 320 Hann, center padded

double max_complex_diff(const ComplexSpectrogram& a, const ComplexSpectrogram& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

}  // namespace

TEST_CASE("frame count and bin count for the 5 s / 32 kHz case") {
  AudioClip x = test::white_noise(160000, 32000, 1);
  auto spec = stft(x, kDefault);
  CHECK(spec.frames == 501);  // floor(160000/320) + 1 with center padding
  CHECK(spec.bins == 513);
  CHECK(spec.source_len == 160000);
}

TEST_CASE("all-zero clip maps to an all-zero spectrogram") {
  AudioClip x{std::vector<double>(4000, 0.0), 8000};
  auto spec = stft(x, kDefault);
  for (const auto& v : spec.data) CHECK(std::abs(v) == 0.0);
  auto back = istft(spec);
  CHECK(back.size() == 4000);
  for (double s : back.samples) CHECK(s == 0.0);
}

TEST_CASE("windowed impulse spectrum matches the direct DFT") {
  StftConfig cfg;
  cfg.window_size = 64;
  cfg.hop_size = 16;
  cfg.center_pad = false;
  AudioClip x{std::vector<double>(64, 0.0), 8000};
  x.samples[0] = 1.0;
  auto spec = stft(x, cfg);
  REQUIRE(spec.frames >= 1);

  auto window = make_window(WindowKind::kHann, 64);
  std::vector<std::complex<double>> frame(64);
  for (int i = 0; i < 64; ++i) frame[size_t(i)] = {window[size_t(i)] * x.samples[size_t(i)], 0.0};
  auto want = test::naive_dft(frame);
  for (int64_t f = 0; f < spec.bins; ++f)
    CHECK(std::abs(spec.at(0, f) - want[size_t(f)]) < 1e-12);
}

TEST_CASE("round trip is exact to 1e-6 in double precision") {
  AudioClip x = test::white_noise(160000, 32000, 42);
  auto back = istft(stft(x, kDefault));
  REQUIRE(back.size() == x.size());
  CHECK(test::max_abs_diff(x.samples, back.samples) < 1e-6);
}

TEST_CASE("round trip holds for lengths not aligned to the hop") {
  AudioClip x = test::white_noise(12345, 16000, 9);
  auto back = istft(stft(x, kDefault));
  REQUIRE(back.size() == 12345);
  CHECK(test::max_abs_diff(x.samples, back.samples) < 1e-6);
}

TEST_CASE("stft is linear") {
  AudioClip x = test::white_noise(8000, 16000, 5);
  AudioClip y = test::white_noise(8000, 16000, 6);
  const double a = 0.7, b = -1.3;
  AudioClip z{std::vector<double>(8000), 16000};
  for (size_t i = 0; i < z.size(); ++i)
    z.samples[i] = a * x.samples[i] + b * y.samples[i];
  auto sx = stft(x, kDefault), sy = stft(y, kDefault), sz = stft(z, kDefault);
  double max_rel = 0.0;
  for (size_t i = 0; i < sz.data.size(); ++i) {
    const auto combo = a * sx.data[i] + b * sy.data[i];
    max_rel = std::max(max_rel, std::abs(sz.data[i] - combo));
  }
  double scale = 0.0;
  for (const auto& v : sz.data) scale = std::max(scale, std::abs(v));
  CHECK(max_rel / scale < 1e-10);
}

TEST_CASE("istft scales linearly") {
  AudioClip x = test::white_noise(6000, 8000, 77);
  AudioClip x2 = x;
  for (double& s : x2.samples) s *= 2.5;
  auto a = istft(stft(x, kDefault));
  auto b = istft(stft(x2, kDefault));
  for (size_t i = 0; i < a.size(); ++i)
    CHECK(b.samples[i] == doctest::Approx(2.5 * a.samples[i]).epsilon(1e-12));
}

TEST_CASE("per-frame Parseval: windowed energy equals weighted bin energy") {
  StftConfig cfg;
  cfg.window_size = 256;
  cfg.hop_size = 80;
  AudioClip x = test::white_noise(4000, 8000, 13);
  auto spec = stft(x, cfg);

  // test-side frame extraction oracle (reflect padding, as the transform does)
  auto window = make_window(WindowKind::kHann, cfg.window_size);
  const int64_t pad = cfg.window_size / 2;
  auto reflect_at = [&](int64_t i) {
    const auto n = static_cast<int64_t>(x.size());
    const int64_t period = 2 * (n - 1);
    int64_t j = i % period;
    if (j < 0) j += period;
    if (j >= n) j = period - j;
    return x.samples[size_t(j)];
  };
  for (int64_t t = 0; t < spec.frames; ++t) {
    double time_energy = 0.0;
    for (int64_t k = 0; k < cfg.window_size; ++k) {
      const double s = reflect_at(t * cfg.hop_size - pad + k) * window[size_t(k)];
      time_energy += s * s;
    }
    double bin_energy = 0.0;
    for (int64_t f = 0; f < spec.bins; ++f) {
      const double w = (f == 0 || f == spec.bins - 1) ? 1.0 : 2.0;
      bin_energy += w * std::norm(spec.at(t, f));
    }
    bin_energy /= cfg.window_size;
    CHECK(bin_energy == doctest::Approx(time_energy).epsilon(1e-6));
  }
}

TEST_CASE("istft rejects COLA-violating hop") {
  StftConfig cfg;
  cfg.window_size = 256;
  cfg.hop_size = 256;  // Hann window has zeros: denominator collapses
  AudioClip x = test::white_noise(2048, 8000, 3);
  auto spec = stft(x, cfg);
  CHECK_THROWS_AS((void)istft(spec), Error);
}

TEST_CASE("stft rejects empty and non-finite input") {
  AudioClip empty{{}, 8000};
  CHECK_THROWS_AS((void)stft(empty, kDefault), Error);
  AudioClip bad{std::vector<double>(4000, 0.0), 8000};
  bad.samples[7] = std::nan("");
  CHECK_THROWS_AS((void)stft(bad, kDefault), Error);
}

TEST_CASE("identity mask reproduces the signal through the full path") {
  AudioClip x = test::white_noise(20000, 16000, 21);
  auto spec = stft(x, kDefault);
  auto back = istft(apply_mask(spec, unit_mask(spec.frames, spec.bins)));
  CHECK(test::max_abs_diff(x.samples, back.samples) < 1e-6);
}

TEST_CASE("zero mask yields silence") {
  AudioClip x = test::white_noise(8000, 8000, 2);
  auto spec = stft(x, kDefault);
  MaskPair m = unit_mask(spec.frames, spec.bins);
  std::fill(m.magnitude.begin(), m.magnitude.end(), 0.0);
  auto out = apply_mask(spec, m);
  for (const auto& v : out.data) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("single-bin mask arithmetic") {
  ComplexSpectrogram x;
  x.frames = 1;
  x.bins = 1;
  x.data = {{1.0, 0.0}};
  MaskPair m;
  m.frames = 1;
  m.bins = 1;
  m.magnitude = {0.5};
  m.phase_residual = {M_PI};
  auto out = apply_mask(x, m);
  CHECK(out.data[0].real() == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(std::abs(out.data[0].imag()) < 1e-12);
}

TEST_CASE("apply_mask rejects shape mismatch") {
  AudioClip x = test::white_noise(4000, 8000, 4);
  auto spec = stft(x, kDefault);
  MaskPair m = unit_mask(spec.frames + 1, spec.bins);
  CHECK_THROWS_AS((void)apply_mask(spec, m), Error);
}

TEST_CASE("ideal mask identities") {
  AudioClip x = test::white_noise(6000, 8000, 8);
  auto spec = stft(x, kDefault);

  auto m_same = ideal_mask(spec, spec);
  for (double v : m_same.magnitude) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
  for (double v : m_same.phase_residual) CHECK(std::abs(v) < 1e-9);

  auto zero = spec;
  std::fill(zero.data.begin(), zero.data.end(), std::complex<double>{0.0, 0.0});
  auto m_zero = ideal_mask(spec, zero);
  for (double v : m_zero.magnitude) CHECK(v == 0.0);
}

TEST_CASE("ideal mask recovers a source from a 0 dB two-source mixture") {
  StftConfig cfg;
  cfg.window_size = 256;
  cfg.hop_size = 80;
  const int rate = 8000;
  AudioClip a = synth_banded_noise(300, 900, 0.2, 2.0, rate, 1);
  AudioClip b = synth_banded_noise(2000, 3600, 0.2, 2.0, rate, 2);
  MixResult mix = mix_at_snr(a, b, 0.0);

  auto mix_spec = stft(mix.mixture, cfg);
  auto tgt_spec = stft(mix.target, cfg);
  auto est = istft(apply_mask(mix_spec, ideal_mask(mix_spec, tgt_spec)));
  CHECK(si_sdr(est, mix.target) > 30.0);
}

TEST_SUITE_END();
