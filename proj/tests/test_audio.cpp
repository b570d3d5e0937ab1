// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include "lasskit/audio.hpp"
#include "lasskit/common.hpp"
#include "support/test_util.hpp"

using namespace lasskit;

TEST_SUITE_BEGIN("audio");

TEST_CASE("float32 WAV round trip") {
  test::TempDir tmp("wav");
  AudioClip x = test::white_noise(4000, 32000, 1);
  write_wav(tmp.file("a.wav"), x, WavFormat::kFloat32);
  AudioClip y = read_wav(tmp.file("a.wav"));
  REQUIRE(y.size() == x.size());
  CHECK(y.sample_rate == 32000);
  for (size_t i = 0; i < x.size(); ++i)
    CHECK(y.samples[i] == doctest::Approx(x.samples[i]).epsilon(1e-7));
}

TEST_CASE("PCM16 WAV round trip within quantization") {
  test::TempDir tmp("wav16");
  AudioClip x = test::white_noise(2000, 16000, 2, 0.8);
  write_wav(tmp.file("a.wav"), x, WavFormat::kPcm16);
  AudioClip y = read_wav(tmp.file("a.wav"));
  REQUIRE(y.size() == x.size());
  CHECK(test::max_abs_diff(x.samples, y.samples) < 1.0 / 32768.0);
}

TEST_CASE("multi-channel input downmixes by averaging") {
  test::TempDir tmp("stereo");
  // hand-rolled stereo float32 file: L = 0.5, R = -0.25
  const uint32_t rate = 8000, frames = 100;
  std::string bytes;
  auto u32 = [&](uint32_t v) { bytes.append(reinterpret_cast<const char*>(&v), 4); };
  auto u16 = [&](uint16_t v) { bytes.append(reinterpret_cast<const char*>(&v), 2); };
  bytes += "RIFF";
  u32(36 + frames * 8);
  bytes += "WAVEfmt ";
  u32(16);
  u16(3);  // IEEE float
  u16(2);  // channels
  u32(rate);
  u32(rate * 8);
  u16(8);
  u16(32);
  bytes += "data";
  u32(frames * 8);
  for (uint32_t i = 0; i < frames; ++i) {
    float l = 0.5f, r = -0.25f;
    bytes.append(reinterpret_cast<const char*>(&l), 4);
    bytes.append(reinterpret_cast<const char*>(&r), 4);
  }
  std::ofstream(tmp.file("st.wav"), std::ios::binary) << bytes;

  AudioClip y = read_wav(tmp.file("st.wav"));
  REQUIRE(y.size() == frames);
  for (double s : y.samples) CHECK(s == doctest::Approx(0.125).epsilon(1e-7));
}

TEST_CASE("unsupported WAV encodings are rejected") {
  test::TempDir tmp("badwav");
  std::ofstream(tmp.file("x.wav"), std::ios::binary) << "RIFFxxxxWAVE";
  CHECK_THROWS_AS((void)read_wav(tmp.file("x.wav")), Error);
  std::ofstream(tmp.file("y.wav"), std::ios::binary) << "not audio";
  CHECK_THROWS_AS((void)read_wav(tmp.file("y.wav")), Error);
  CHECK_THROWS_AS((void)read_wav(tmp.file("missing.wav")), Error);
}

TEST_CASE("write_wav rejects non-finite samples") {
  test::TempDir tmp("nf");
  AudioClip x{std::vector<double>(10, 0.0), 8000};
  x.samples[3] = INFINITY;
  CHECK_THROWS_AS(write_wav(tmp.file("x.wav"), x), Error);
}

TEST_CASE("windowed-sinc resampling preserves an in-band sine") {
  const int from = 44100, to = 32000;
  const double freq = 997.0;
  AudioClip x;
  x.sample_rate = from;
  x.samples.resize(from);  // 1 s
  for (size_t i = 0; i < x.size(); ++i)
    x.samples[i] = 0.5 * std::sin(2.0 * M_PI * freq * double(i) / from);

  AudioClip y = resample(x, to);
  CHECK(y.sample_rate == to);
  CHECK(std::llabs(int64_t(y.size()) - to) <= 1);

  // compare the interior against the analytic sine at the new rate
  double max_err = 0.0;
  for (size_t i = 1000; i + 1000 < y.size(); ++i) {
    const double want = 0.5 * std::sin(2.0 * M_PI * freq * double(i) / to);
    max_err = std::max(max_err, std::abs(y.samples[i] - want));
  }
  CHECK(max_err < 5e-3);
}

TEST_CASE("resampling to the same rate is the identity") {
  AudioClip x = test::white_noise(1000, 8000, 3);
  AudioClip y = resample(x, 8000);
  CHECK(test::max_abs_diff(x.samples, y.samples) == 0.0);
}

TEST_SUITE_END();
