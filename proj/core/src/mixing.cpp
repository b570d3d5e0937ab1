// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lasskit/mixing.hpp"

#include <cmath>

#include "lasskit/common.hpp"

namespace lasskit {

double energy(const AudioClip& clip) {
  if (clip.empty()) raise(ErrorCode::kInvalidArgument, "energy: empty clip");
  double e = 0.0;
  for (double s : clip.samples) e += s * s;
  return e;
}

double snr_scale_factor(double e1, double e2, double snr_db) {
  if (!(e1 > 0.0))
    raise(ErrorCode::kSilentSource, "snr_scale_factor: target energy is zero");
  if (!(e2 > 0.0))
    raise(ErrorCode::kSilentSource, "snr_scale_factor: interferer energy is zero");
  return std::sqrt((e1 / e2) * std::pow(10.0, -snr_db / 10.0));
}

double measure_snr(const AudioClip& target, const AudioClip& interferer) {
  return 10.0 * std::log10(energy(target) / energy(interferer));
}

MixResult mix_at_snr(const AudioClip& s1, const AudioClip& s2, double snr_db) {
  if (s1.size() != s2.size())
    raise(ErrorCode::kInvalidArgument, "mix_at_snr: length mismatch");
  if (s1.sample_rate != s2.sample_rate)
    raise(ErrorCode::kInvalidArgument, "mix_at_snr: sample rate mismatch");
  validate_clip(s1, "mix_at_snr: s1");
  validate_clip(s2, "mix_at_snr: s2");

  const double alpha = snr_scale_factor(energy(s1), energy(s2), snr_db);

  MixResult r;
  r.alpha = alpha;
  r.snr_db = snr_db;
  r.target = s1;
  r.interferer_scaled.sample_rate = s2.sample_rate;
  r.interferer_scaled.samples.resize(s2.size());
  r.mixture.sample_rate = s1.sample_rate;
  r.mixture.samples.resize(s1.size());
  for (size_t i = 0; i < s1.size(); ++i) {
    const double v = alpha * s2.samples[i];
    r.interferer_scaled.samples[i] = v;
    r.mixture.samples[i] = s1.samples[i] + v;
  }
  return r;
}

std::pair<AudioClip, double> clip_guard(const AudioClip& clip, double peak) {
  if (!(peak > 0.0))
    raise(ErrorCode::kInvalidArgument, "clip_guard: peak must be positive");
  const double p = peak_abs(clip);
  if (p <= 1.0) return {clip, 1.0};
  const double scale = peak / p;
  AudioClip out = clip;
  for (double& s : out.samples) s *= scale;
  return {out, scale};
}

}  // namespace lasskit
