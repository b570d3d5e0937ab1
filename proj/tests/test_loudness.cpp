// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <cmath>

#include "lasskit/common.hpp"
#include "lasskit/mixing.hpp"
#include "lasskit/synth.hpp"
#include "support/test_util.hpp"

using namespace lasskit;

TEST_SUITE_BEGIN("loudness");

TEST_CASE("full-scale 997 Hz sine is about -3.70 LUFS") {
  // closed form: -0.691 + 10*log10(0.5) with near-unity K-weighting at 997 Hz
  for (int rate : {32000, 48000}) {
    AudioClip x = synth_tone(997.0, 1.0, 0.0, 5.0, rate);
    const double lufs = integrated_loudness(x);
    CHECK(std::abs(lufs - (-3.70)) < 0.15);
  }
}

TEST_CASE("halving the amplitude drops loudness by 6.02 LU") {
  AudioClip x = synth_tone(997.0, 1.0, 0.0, 5.0, 32000);
  AudioClip half = x;
  for (double& s : half.samples) s *= 0.5;
  const double delta = integrated_loudness(x) - integrated_loudness(half);
  CHECK(std::abs(delta - 6.0206) < 0.05);
}

TEST_CASE("silence measures as -infinity") {
  AudioClip zeros{std::vector<double>(32000, 0.0), 32000};
  CHECK(integrated_loudness(zeros) == -INFINITY);
}

TEST_CASE("clips shorter than one block are rejected") {
  AudioClip x = synth_tone(440.0, 0.5, 0.0, 0.3, 32000);  // < 400 ms
  CHECK_THROWS_AS((void)integrated_loudness(x), Error);
}

TEST_CASE("normalization reaches the target within 0.1 LU") {
  AudioClip x = synth_banded_noise(200, 4000, 0.1, 3.0, 16000, 7);
  for (double target : {-35.0, -30.0, -25.0}) {
    AudioClip y = normalize_to_loudness(x, target);
    CHECK(std::abs(integrated_loudness(y) - target) < 0.1);
  }
}

TEST_CASE("normalizing to the current loudness is a unit gain") {
  AudioClip x = synth_banded_noise(200, 4000, 0.1, 2.0, 16000, 8);
  const double cur = integrated_loudness(x);
  AudioClip y = normalize_to_loudness(x, cur);
  for (size_t i = 0; i < x.size(); ++i)
    CHECK(y.samples[i] == doctest::Approx(x.samples[i]).epsilon(1e-6));
}

TEST_CASE("normalization is idempotent within 0.1 LU") {
  AudioClip x = synth_banded_noise(300, 3000, 0.2, 2.0, 16000, 9);
  AudioClip y = normalize_to_loudness(x, -28.0);
  AudioClip z = normalize_to_loudness(y, -28.0);
  CHECK(std::abs(integrated_loudness(z) - integrated_loudness(y)) < 0.1);
}

TEST_CASE("silent input cannot be normalized") {
  AudioClip zeros{std::vector<double>(32000, 0.0), 32000};
  CHECK_THROWS_AS((void)normalize_to_loudness(zeros, -30.0), Error);
}

TEST_CASE("expected gain for a 10 LU move") {
  AudioClip x = synth_banded_noise(200, 4000, 0.15, 3.0, 16000, 10);
  AudioClip base = normalize_to_loudness(x, -20.0);
  AudioClip moved = normalize_to_loudness(base, -30.0);
  const double gain = moved.samples[1234] / base.samples[1234];
  CHECK(gain == doctest::Approx(std::pow(10.0, -0.5)).epsilon(2e-2));
}

TEST_SUITE_END();
