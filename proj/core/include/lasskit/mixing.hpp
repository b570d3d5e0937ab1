// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <utility>

#include "lasskit/audio.hpp"

namespace lasskit {

// Sum of squared samples.
double energy(const AudioClip& clip);

// Interferer gain alpha = sqrt((e1/e2) * 10^(-snr_db/10)). Scaling the
// interferer by alpha makes 10*log10(e1 / (alpha^2 * e2)) equal snr_db,
// i.e. the target keeps unit gain and snr_db is the target-vs-interferer
// ratio of the resulting mixture.
double snr_scale_factor(double e1, double e2, double snr_db);

// Measured 10*log10(E(target)/E(interferer)).
double measure_snr(const AudioClip& target, const AudioClip& interferer);

struct MixResult {
  AudioClip mixture;            // x = s1 + alpha*s2
  AudioClip target;             // s1, unscaled
  AudioClip interferer_scaled;  // alpha*s2
  double alpha = 1.0;
  double snr_db = 0.0;
};

MixResult mix_at_snr(const AudioClip& s1, const AudioClip& s2, double snr_db);

// Integrated loudness in LUFS: K-weighted 400 ms blocks at 75 % overlap,
// -70 LUFS absolute gate then -10 LU relative gate, mono weighting.
// Returns -infinity for fully gated (silent) input.
double integrated_loudness(const AudioClip& clip);

// Single multiplicative gain to the target loudness. Throws kSilentSource
// when the measured loudness is -infinity.
AudioClip normalize_to_loudness(const AudioClip& clip, double target_lufs);

// If max |sample| exceeds 1.0, rescales so the peak equals `peak` and
// returns the applied scale; identity (scale 1.0) otherwise.
std::pair<AudioClip, double> clip_guard(const AudioClip& clip,
                                        double peak = 0.9);

}  // namespace lasskit
