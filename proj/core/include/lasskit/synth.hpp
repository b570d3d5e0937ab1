// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>

#include "lasskit/audio.hpp"

namespace lasskit {

AudioClip synth_tone(double freq_hz, double amp, double phase, double seconds,
                     int sample_rate);

// Flat-magnitude random-phase noise confined to [lo_hz, hi_hz], scaled to
// the requested RMS.
AudioClip synth_banded_noise(double lo_hz, double hi_hz, double rms,
                             double seconds, int sample_rate, uint64_t seed);

struct ToyCorpusSpec {
  int n_per_class = 24;
  double clip_seconds = 2.0;
  int sample_rate = 8000;
  uint64_t seed = 0;
  double tone_lo_hz = 200.0;
  double tone_hi_hz = 800.0;
  double noise_lo_hz = 2000.0;
  double noise_hi_hz = 4000.0;
};

// Two-class corpus ("tone": random sines, "noise": band-limited noise)
// written as WAVs plus a manifest.jsonl; returns the manifest path.
std::string write_toy_corpus(const std::string& dir, const ToyCorpusSpec& spec);

}  // namespace lasskit
