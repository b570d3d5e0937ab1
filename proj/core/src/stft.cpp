// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lasskit/stft.hpp"

#include <algorithm>
#include <cmath>

#include "lasskit/common.hpp"
#include "lasskit/fft.hpp"

namespace lasskit {

void StftConfig::validate() const {
  if (window_size <= 0 || window_size % 2 != 0)
    raise(ErrorCode::kInvalidArgument, "StftConfig: window_size must be positive and even");
  if (hop_size <= 0 || hop_size > window_size)
    raise(ErrorCode::kInvalidArgument, "StftConfig: need 0 < hop_size <= window_size");
}

std::vector<double> make_window(WindowKind kind, int n) {
  (void)kind;  // single kind for now
  std::vector<double> w(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    w[static_cast<size_t>(i)] =
        0.5 - 0.5 * std::cos(2.0 * M_PI * i / static_cast<double>(n));
  return w;
}

MaskPair unit_mask(int64_t frames, int64_t bins) {
  MaskPair m;
  m.frames = frames;
  m.bins = bins;
  m.magnitude.assign(static_cast<size_t>(frames * bins), 1.0);
  m.phase_residual.assign(static_cast<size_t>(frames * bins), 0.0);
  return m;
}

double wrap_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a < 0) a += 2.0 * M_PI;
  return a - M_PI;
}

namespace {

// Reflect-padded sample access (no edge repetition, numpy 'reflect').
double padded_sample(const std::vector<double>& x, int64_t i) {
  const auto n = static_cast<int64_t>(x.size());
  if (n == 1) return x[0];
  const int64_t period = 2 * (n - 1);
  int64_t j = i % period;
  if (j < 0) j += period;
  if (j >= n) j = period - j;
  return x[static_cast<size_t>(j)];
}

}  // namespace

ComplexSpectrogram stft(const AudioClip& clip, const StftConfig& cfg) {
  cfg.validate();
  if (clip.empty()) raise(ErrorCode::kInvalidArgument, "stft: empty signal");
  validate_clip(clip, "stft");

  const int64_t w = cfg.window_size;
  const int64_t hop = cfg.hop_size;
  const auto n = static_cast<int64_t>(clip.samples.size());
  const int64_t pad = cfg.center_pad ? w / 2 : 0;
  const int64_t total = n + 2 * pad;
  if (total < w)
    raise(ErrorCode::kInvalidArgument, "stft: signal shorter than one window");
  const int64_t frames = (total - w) / hop + 1;

  ComplexSpectrogram spec;
  spec.config = cfg;
  spec.source_len = n;
  spec.sample_rate = clip.sample_rate;
  spec.frames = frames;
  spec.bins = cfg.bins();
  spec.data.resize(static_cast<size_t>(frames * spec.bins));

  const std::vector<double> window = make_window(cfg.window, cfg.window_size);
  std::vector<double> frame(static_cast<size_t>(w));
  for (int64_t t = 0; t < frames; ++t) {
    const int64_t start = t * hop - pad;
    for (int64_t k = 0; k < w; ++k) {
      const int64_t i = start + k;
      const double s = (i >= 0 && i < n) ? clip.samples[static_cast<size_t>(i)]
                       : cfg.center_pad  ? padded_sample(clip.samples, i)
                                         : 0.0;
      frame[static_cast<size_t>(k)] = s * window[static_cast<size_t>(k)];
    }
    auto bins = rfft(frame);
    std::copy(bins.begin(), bins.end(), spec.data.begin() + t * spec.bins);
  }
  return spec;
}

AudioClip istft(const ComplexSpectrogram& spec) {
  spec.config.validate();
  const int64_t w = spec.config.window_size;
  const int64_t hop = spec.config.hop_size;
  const int64_t pad = spec.config.center_pad ? w / 2 : 0;
  if (spec.bins != spec.config.bins() || spec.frames <= 0)
    raise(ErrorCode::kInvalidArgument, "istft: inconsistent spectrogram shape");

  const int64_t total = (spec.frames - 1) * hop + w;
  std::vector<double> acc(static_cast<size_t>(total), 0.0);
  std::vector<double> den(static_cast<size_t>(total), 0.0);
  const std::vector<double> window = make_window(spec.config.window, spec.config.window_size);

  std::vector<std::complex<double>> bins(static_cast<size_t>(spec.bins));
  for (int64_t t = 0; t < spec.frames; ++t) {
    std::copy(spec.data.begin() + t * spec.bins,
              spec.data.begin() + (t + 1) * spec.bins, bins.begin());
    std::vector<double> frame = irfft(bins, static_cast<size_t>(w));
    const int64_t off = t * hop;
    for (int64_t k = 0; k < w; ++k) {
      const double win = window[static_cast<size_t>(k)];
      acc[static_cast<size_t>(off + k)] += frame[static_cast<size_t>(k)] * win;
      den[static_cast<size_t>(off + k)] += win * win;
    }
  }

  const int64_t out_len =
      spec.source_len > 0 ? spec.source_len : total - 2 * pad;
  if (pad + out_len > total)
    raise(ErrorCode::kInvalidArgument, "istft: source_len exceeds frame coverage");

  AudioClip out;
  out.sample_rate = spec.sample_rate;
  out.samples.resize(static_cast<size_t>(out_len));
  for (int64_t i = 0; i < out_len; ++i) {
    const double d = den[static_cast<size_t>(pad + i)];
    if (d < 1e-8)
      raise(ErrorCode::kColaViolation,
            "istft: overlap-add denominator below 1e-8 at sample " +
                std::to_string(i));
    out.samples[static_cast<size_t>(i)] =
        acc[static_cast<size_t>(pad + i)] / d;
  }
  return out;
}

ComplexSpectrogram apply_mask(const ComplexSpectrogram& x, const MaskPair& m) {
  if (x.frames != m.frames || x.bins != m.bins)
    raise(ErrorCode::kShapeMismatch, "apply_mask: spectrogram/mask shape mismatch");
  ComplexSpectrogram out = x;
  const size_t n = x.data.size();
  for (size_t i = 0; i < n; ++i) {
    const double mag = m.magnitude[i];
    const double psi = m.phase_residual[i];
    out.data[i] = x.data[i] * std::complex<double>{mag * std::cos(psi),
                                                   mag * std::sin(psi)};
  }
  return out;
}

MaskPair ideal_mask(const ComplexSpectrogram& mix_spec,
                    const ComplexSpectrogram& target_spec, double mask_ceiling) {
  if (mix_spec.frames != target_spec.frames || mix_spec.bins != target_spec.bins)
    raise(ErrorCode::kShapeMismatch, "ideal_mask: shape mismatch");
  constexpr double kEps = 1e-8;
  MaskPair m;
  m.frames = mix_spec.frames;
  m.bins = mix_spec.bins;
  const size_t n = mix_spec.data.size();
  m.magnitude.resize(n);
  m.phase_residual.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const auto& x = mix_spec.data[i];
    const auto& s = target_spec.data[i];
    const double ratio = std::abs(s) / std::max(std::abs(x), kEps);
    m.magnitude[i] = std::clamp(ratio, 0.0, mask_ceiling);
    m.phase_residual[i] =
        std::abs(s) == 0.0 ? 0.0 : wrap_angle(std::arg(s) - std::arg(x));
  }
  return m;
}

}  // namespace lasskit
