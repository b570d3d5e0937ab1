// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lasskit/synth.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lasskit/common.hpp"
#include "lasskit/fft.hpp"
#include "lasskit/rng.hpp"

namespace lasskit {

namespace fs = std::filesystem;

AudioClip synth_tone(double freq_hz, double amp, double phase, double seconds,
                     int sample_rate) {
  AudioClip out;
  out.sample_rate = sample_rate;
  const auto n = static_cast<size_t>(std::lround(seconds * sample_rate));
  out.samples.resize(n);
  const double w = 2.0 * M_PI * freq_hz / sample_rate;
  for (size_t i = 0; i < n; ++i)
    out.samples[i] = amp * std::sin(w * static_cast<double>(i) + phase);
  return out;
}

AudioClip synth_banded_noise(double lo_hz, double hi_hz, double rms,
                             double seconds, int sample_rate, uint64_t seed) {
  if (!(lo_hz < hi_hz) || hi_hz > sample_rate / 2.0 + 1e-9)
    raise(ErrorCode::kInvalidArgument, "synth_banded_noise: bad band");
  auto n = static_cast<size_t>(std::lround(seconds * sample_rate));
  if (n % 2 != 0) ++n;
  const size_t bins = n / 2 + 1;
  std::vector<std::complex<double>> spec(bins, {0.0, 0.0});
  const double hz_per_bin = static_cast<double>(sample_rate) / static_cast<double>(n);
  Rng rng(seed);
  for (size_t f = 1; f < bins; ++f) {
    const double hz = f * hz_per_bin;
    if (hz < lo_hz || hz > hi_hz) continue;
    const double ph = rng.uniform(0.0, 2.0 * M_PI);
    spec[f] = {std::cos(ph), std::sin(ph)};
  }
  std::vector<double> wave = irfft(spec, n);
  double e = 0.0;
  for (double s : wave) e += s * s;
  const double cur_rms = std::sqrt(e / static_cast<double>(n));
  const double gain = cur_rms > 1e-12 ? rms / cur_rms : 0.0;

  AudioClip out;
  out.sample_rate = sample_rate;
  out.samples.resize(n);
  for (size_t i = 0; i < n; ++i) out.samples[i] = wave[i] * gain;
  return out;
}

std::string write_toy_corpus(const std::string& dir, const ToyCorpusSpec& spec) {
  fs::create_directories(dir);
  const std::string manifest_path = (fs::path(dir) / "manifest.jsonl").string();
  std::ofstream manifest(manifest_path, std::ios::binary | std::ios::trunc);
  if (!manifest) raise(ErrorCode::kIoError, "cannot write " + manifest_path);

  Rng rng(spec.seed);
  char name[64];
  auto emit = [&](const std::string& id, const std::string& label,
                  const AudioClip& clip) {
    const std::string file = id + ".wav";
    write_wav((fs::path(dir) / file).string(), clip, WavFormat::kFloat32);
    manifest << "{\"id\":\"" << id << "\",\"path\":\"" << file
             << "\",\"labels\":[\"" << label << "\"],\"captions\":[],"
             << "\"duration_s\":" << clip.duration_s()
             << ",\"sample_rate\":" << clip.sample_rate << "}\n";
  };

  for (int i = 0; i < spec.n_per_class; ++i) {
    const double freq = rng.uniform(spec.tone_lo_hz, spec.tone_hi_hz);
    const double amp = rng.uniform(0.25, 0.7);
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    std::snprintf(name, sizeof(name), "tone-%03d", i);
    emit(name, "tone",
         synth_tone(freq, amp, phase, spec.clip_seconds, spec.sample_rate));
  }
  for (int i = 0; i < spec.n_per_class; ++i) {
    const double rms = rng.uniform(0.08, 0.25);
    std::snprintf(name, sizeof(name), "noise-%03d", i);
    emit(name, "noise",
         synth_banded_noise(spec.noise_lo_hz, spec.noise_hi_hz, rms,
                            spec.clip_seconds, spec.sample_rate,
                            rng.next_u64()));
  }
  if (!manifest) raise(ErrorCode::kIoError, "short manifest write");
  return manifest_path;
}

}  // namespace lasskit
