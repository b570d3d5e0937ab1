// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "lasskit/common.hpp"
#include "lasskit/mixing.hpp"

namespace lasskit {

namespace {

struct Biquad {
  double b0, b1, b2, a1, a2;
  double z1 = 0.0, z2 = 0.0;

  double process(double x) {
    // transposed direct form II
    const double y = b0 * x + z1;
    z1 = b1 * x - a1 * y + z2;
    z2 = b2 * x - a2 * y;
    return y;
  }
};

// K-weighting stages redesigned for the working sample rate from the analog
// prototypes (the published table assumes 48 kHz). Parameterization follows
// Mansbridge, Finn & Reiss, "Implementation and Evaluation of Autonomous
// Multi-track Fader Control", AES 132nd Convention, 2012.
Biquad shelf_stage(double fs) {
  const double db = 3.999843853973347;
  const double f0 = 1681.974450955533;
  const double q = 0.7071752369554196;
  const double k = std::tan(M_PI * f0 / fs);
  const double vh = std::pow(10.0, db / 20.0);
  const double vb = std::pow(vh, 0.4996667741545416);
  const double a0 = 1.0 + k / q + k * k;
  Biquad s{};
  s.b0 = (vh + vb * k / q + k * k) / a0;
  s.b1 = 2.0 * (k * k - vh) / a0;
  s.b2 = (vh - vb * k / q + k * k) / a0;
  s.a1 = 2.0 * (k * k - 1.0) / a0;
  s.a2 = (1.0 - k / q + k * k) / a0;
  return s;
}

Biquad highpass_stage(double fs) {
  const double f0 = 38.13547087602444;
  const double q = 0.5003270373238773;
  const double k = std::tan(M_PI * f0 / fs);
  const double a0 = 1.0 + k / q + k * k;
  Biquad s{};
  s.b0 = 1.0;
  s.b1 = -2.0;
  s.b2 = 1.0;
  s.a1 = 2.0 * (k * k - 1.0) / a0;
  s.a2 = (1.0 - k / q + k * k) / a0;
  return s;
}

constexpr double kLoudnessOffset = -0.691;
constexpr double kAbsoluteGateLufs = -70.0;
constexpr double kRelativeGateLu = -10.0;

double biquad_gain_at(const Biquad& s, double w) {
  const std::complex<double> z{std::cos(w), -std::sin(w)};
  const std::complex<double> num = s.b0 + s.b1 * z + s.b2 * z * z;
  const std::complex<double> den = 1.0 + s.a1 * z + s.a2 * z * z;
  return std::abs(num / den);
}

// The weighting chain is normalized to unity gain at 997 Hz, so a
// full-scale 997 Hz sine reads -0.691 + 10*log10(0.5) = -3.70 LUFS.
double chain_gain_997(const Biquad& shelf, const Biquad& hp, double fs) {
  const double w = 2.0 * M_PI * 997.0 / fs;
  return biquad_gain_at(shelf, w) * biquad_gain_at(hp, w);
}

}  // namespace

double integrated_loudness(const AudioClip& clip) {
  validate_clip(clip, "integrated_loudness");
  const double fs = clip.sample_rate;
  const auto block = static_cast<size_t>(std::lround(0.400 * fs));
  const auto step = static_cast<size_t>(std::lround(0.100 * fs));
  if (clip.size() < block)
    raise(ErrorCode::kShortClip,
          "integrated_loudness: clip shorter than one 400 ms block");

  Biquad shelf = shelf_stage(fs);
  Biquad highpass = highpass_stage(fs);
  const double norm = 1.0 / chain_gain_997(shelf, highpass, fs);
  std::vector<double> weighted(clip.size());
  for (size_t i = 0; i < clip.size(); ++i)
    weighted[i] = norm * highpass.process(shelf.process(clip.samples[i]));

  // prefix sums of squared weighted samples for O(1) block power
  std::vector<double> csum(clip.size() + 1, 0.0);
  for (size_t i = 0; i < clip.size(); ++i)
    csum[i + 1] = csum[i] + weighted[i] * weighted[i];

  const size_t n_blocks = (clip.size() - block) / step + 1;
  std::vector<double> block_power(n_blocks);
  for (size_t j = 0; j < n_blocks; ++j) {
    const size_t start = j * step;
    block_power[j] = (csum[start + block] - csum[start]) / block;
  }

  const double neg_inf = -std::numeric_limits<double>::infinity();
  auto block_lufs = [](double z) {
    return z > 0.0 ? kLoudnessOffset + 10.0 * std::log10(z)
                   : -std::numeric_limits<double>::infinity();
  };

  double sum_abs = 0.0;
  size_t n_abs = 0;
  for (double z : block_power) {
    if (block_lufs(z) > kAbsoluteGateLufs) {
      sum_abs += z;
      ++n_abs;
    }
  }
  if (n_abs == 0) return neg_inf;

  const double gamma_r =
      kLoudnessOffset + 10.0 * std::log10(sum_abs / n_abs) + kRelativeGateLu;

  double sum_rel = 0.0;
  size_t n_rel = 0;
  for (double z : block_power) {
    const double l = block_lufs(z);
    if (l > kAbsoluteGateLufs && l > gamma_r) {
      sum_rel += z;
      ++n_rel;
    }
  }
  if (n_rel == 0) return neg_inf;
  return kLoudnessOffset + 10.0 * std::log10(sum_rel / n_rel);
}

AudioClip normalize_to_loudness(const AudioClip& clip, double target_lufs) {
  const double current = integrated_loudness(clip);
  if (!std::isfinite(current))
    raise(ErrorCode::kSilentSource, "normalize_to_loudness: silent input");
  const double gain = std::pow(10.0, (target_lufs - current) / 20.0);
  AudioClip out = clip;
  for (double& s : out.samples) s *= gain;
  return out;
}

}  // namespace lasskit
