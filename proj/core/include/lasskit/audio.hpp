// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lasskit {

// Mono waveform. Samples are dimensionless amplitudes, nominally in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 0;

  AudioClip() = default;
  AudioClip(std::vector<double> s, int rate)
      : samples(std::move(s)), sample_rate(rate) {}

  size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate
                           : 0.0;
  }
};

// Throws kInvalidArgument / kNonFinite when the clip violates its invariants.
void validate_clip(const AudioClip& clip, const std::string& what);

double peak_abs(const AudioClip& clip);

enum class WavFormat { kPcm16, kFloat32 };

// Mono or multi-channel PCM16 / IEEE float32 RIFF. Multi-channel input is
// downmixed by averaging the channels.
AudioClip read_wav(const std::string& path);
void write_wav(const std::string& path, const AudioClip& clip,
               WavFormat format = WavFormat::kFloat32);

// Windowed-sinc (Hann window, 32 zero crossings) polyphase-free resampler.
AudioClip resample(const AudioClip& clip, int target_rate);

}  // namespace lasskit
