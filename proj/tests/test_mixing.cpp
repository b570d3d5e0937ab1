// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <cmath>

#include "lasskit/common.hpp"
#include "lasskit/mixing.hpp"
#include "lasskit/rng.hpp"
#include "support/test_util.hpp"

using namespace lasskit;

TEST_SUITE_BEGIN("mixing");

TEST_CASE("energy of elementary signals") {
  AudioClip ones{std::vector<double>(100, 1.0), 8000};
  CHECK(energy(ones) == doctest::Approx(100.0));

  AudioClip zeros{std::vector<double>(64, 0.0), 8000};
  CHECK(energy(zeros) == 0.0);

  // unit-amplitude sine over whole periods: N/2
  const int n = 8000;
  AudioClip sine{std::vector<double>(n), 8000};
  for (int i = 0; i < n; ++i)
    sine.samples[size_t(i)] = std::sin(2.0 * M_PI * 50.0 * i / n);  // 50 periods
  CHECK(energy(sine) == doctest::Approx(n / 2.0).epsilon(1e-9));

  AudioClip empty{{}, 8000};
  CHECK_THROWS_AS((void)energy(empty), Error);
}

TEST_CASE("scale factor closed forms") {
  CHECK(snr_scale_factor(1.0, 1.0, 0.0) == doctest::Approx(1.0));
  CHECK(snr_scale_factor(4.0, 1.0, 0.0) == doctest::Approx(2.0));
  CHECK(snr_scale_factor(1.0, 1.0, 10.0) ==
        doctest::Approx(std::pow(10.0, -0.5)).epsilon(1e-12));
  CHECK_THROWS_AS((void)snr_scale_factor(0.0, 1.0, 0.0), Error);
  CHECK_THROWS_AS((void)snr_scale_factor(1.0, 0.0, 0.0), Error);
}

TEST_CASE("alpha is strictly decreasing in the requested SNR") {
  double prev = snr_scale_factor(2.0, 3.0, -20.0);
  for (double snr = -15.0; snr <= 20.0; snr += 2.5) {
    const double a = snr_scale_factor(2.0, 3.0, snr);
    CHECK(a < prev);
    prev = a;
  }
}

TEST_CASE("equal-energy sources at 0 dB mix with unit gain") {
  AudioClip a = test::white_noise(4000, 8000, 1);
  AudioClip b = test::white_noise(4000, 8000, 2);
  const double gain = std::sqrt(energy(a) / energy(b));
  for (double& s : b.samples) s *= gain;
  MixResult r = mix_at_snr(a, b, 0.0);
  CHECK(r.alpha == doctest::Approx(1.0).epsilon(1e-12));
  for (size_t i = 0; i < a.size(); ++i)
    CHECK(r.mixture.samples[i] ==
          doctest::Approx(a.samples[i] + b.samples[i]).epsilon(1e-12));
}

TEST_CASE("re-measured SNR equals the request to 1e-6 dB") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    AudioClip a = test::white_noise(2000, 8000, rng.next_u64());
    AudioClip b = test::white_noise(2000, 8000, rng.next_u64());
    const double snr = rng.uniform(-15.0, 15.0);
    MixResult r = mix_at_snr(a, b, snr);
    CHECK(measure_snr(r.target, r.interferer_scaled) ==
          doctest::Approx(snr).epsilon(1e-9));
    // mixture decomposes exactly
    for (size_t i = 0; i < a.size(); ++i)
      CHECK(r.mixture.samples[i] ==
            r.target.samples[i] + r.interferer_scaled.samples[i]);
  }
}

TEST_CASE("augmentation range endpoints are accepted") {
  AudioClip a = test::white_noise(1000, 8000, 5);
  AudioClip b = test::white_noise(1000, 8000, 6);
  CHECK_NOTHROW((void)mix_at_snr(a, b, -15.0));
  CHECK_NOTHROW((void)mix_at_snr(a, b, 15.0));
}

TEST_CASE("mix_at_snr validates inputs") {
  AudioClip a = test::white_noise(1000, 8000, 7);
  AudioClip b = test::white_noise(999, 8000, 8);
  CHECK_THROWS_AS((void)mix_at_snr(a, b, 0.0), Error);
  AudioClip c = test::white_noise(1000, 16000, 8);
  CHECK_THROWS_AS((void)mix_at_snr(a, c, 0.0), Error);
  AudioClip silent{std::vector<double>(1000, 0.0), 8000};
  CHECK_THROWS_AS((void)mix_at_snr(a, silent, 0.0), Error);
  try {
    (void)mix_at_snr(a, silent, 0.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSilentSource);
  }
}

TEST_CASE("clip guard") {
  AudioClip loud{std::vector<double>(100, 0.0), 8000};
  loud.samples[10] = 1.5;
  auto [guarded, scale] = clip_guard(loud);
  CHECK(scale == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(peak_abs(guarded) == doctest::Approx(0.9).epsilon(1e-12));

  AudioClip quiet{std::vector<double>(100, 0.0), 8000};
  quiet.samples[3] = 0.8;
  auto [same, s2] = clip_guard(quiet);
  CHECK(s2 == 1.0);
  CHECK(same.samples == quiet.samples);

  // idempotent
  auto [again, s3] = clip_guard(guarded);
  CHECK(s3 == 1.0);
  CHECK(again.samples == guarded.samples);
}

TEST_SUITE_END();
