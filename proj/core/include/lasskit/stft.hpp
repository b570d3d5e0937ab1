// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "lasskit/audio.hpp"

namespace lasskit {

enum class WindowKind { kHann };

struct StftConfig {
  int window_size = 1024;
  int hop_size = 320;
  WindowKind window = WindowKind::kHann;
  bool center_pad = true;

  void validate() const;
  int bins() const { return window_size / 2 + 1; }
};

// Periodic Hann, length n.
std::vector<double> make_window(WindowKind kind, int n);

// T x F complex matrix, row-major over frames.
struct ComplexSpectrogram {
  std::vector<std::complex<double>> data;
  int64_t frames = 0;  // T
  int64_t bins = 0;    // F = window_size/2 + 1
  StftConfig config;
  int64_t source_len = 0;
  int sample_rate = 0;

  std::complex<double>& at(int64_t t, int64_t f) { return data[t * bins + f]; }
  const std::complex<double>& at(int64_t t, int64_t f) const {
    return data[t * bins + f];
  }
};

// Magnitude mask and phase residual, T x F row-major; the mask scales |X|
// and the residual rotates the mixture phase.
struct MaskPair {
  std::vector<double> magnitude;
  std::vector<double> phase_residual;  // radians, in [-pi, pi]
  int64_t frames = 0;
  int64_t bins = 0;

  double& mag(int64_t t, int64_t f) { return magnitude[t * bins + f]; }
  double& phase(int64_t t, int64_t f) { return phase_residual[t * bins + f]; }
  const double& mag(int64_t t, int64_t f) const { return magnitude[t * bins + f]; }
  const double& phase(int64_t t, int64_t f) const {
    return phase_residual[t * bins + f];
  }
};

MaskPair unit_mask(int64_t frames, int64_t bins);

ComplexSpectrogram stft(const AudioClip& clip, const StftConfig& cfg);

// Squared-window overlap-add synthesis; returns exactly source_len samples.
// Throws kColaViolation when the window/hop pair leaves any output sample
// with denominator below 1e-8.
AudioClip istft(const ComplexSpectrogram& spec);

// S_hat = |M| .* |X| e^{j(angle(X) + angle(M))}, element-wise.
ComplexSpectrogram apply_mask(const ComplexSpectrogram& x, const MaskPair& m);

// Oracle mask from ground-truth target spectrum: |M| = clamp(|S|/max(|X|,eps),
// 0, ceiling), phase residual = wrap(angle(S) - angle(X)).
MaskPair ideal_mask(const ComplexSpectrogram& mix_spec,
                    const ComplexSpectrogram& target_spec,
                    double mask_ceiling = 2.0);

// Wraps an angle to [-pi, pi].
double wrap_angle(double a);

}  // namespace lasskit
