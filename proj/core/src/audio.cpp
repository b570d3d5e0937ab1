// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lasskit/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "lasskit/common.hpp"

namespace lasskit {

void validate_clip(const AudioClip& clip, const std::string& what) {
  if (clip.sample_rate <= 0)
    raise(ErrorCode::kInvalidArgument, what + ": sample_rate must be positive");
  for (double s : clip.samples) {
    if (!std::isfinite(s))
      raise(ErrorCode::kNonFinite, what + ": non-finite sample");
  }
}

double peak_abs(const AudioClip& clip) {
  double peak = 0.0;
  for (double s : clip.samples) peak = std::max(peak, std::abs(s));
  return peak;
}

namespace {

struct LeReader {
  const unsigned char* p;
  size_t len;
  size_t pos = 0;

  bool take(void* out, size_t n) {
    if (pos + n > len) return false;
    std::memcpy(out, p + pos, n);
    pos += n;
    return true;
  }
  uint32_t u32() {
    uint32_t v = 0;
    if (!take(&v, 4)) raise(ErrorCode::kParseError, "truncated WAV");
    return v;
  }
  uint16_t u16() {
    uint16_t v = 0;
    if (!take(&v, 2)) raise(ErrorCode::kParseError, "truncated WAV");
    return v;
  }
};

void put_u32(std::string& s, uint32_t v) { s.append(reinterpret_cast<const char*>(&v), 4); }
void put_u16(std::string& s, uint16_t v) { s.append(reinterpret_cast<const char*>(&v), 2); }

constexpr uint16_t kWavePcm = 1;
constexpr uint16_t kWaveFloat = 3;
constexpr uint16_t kWaveExtensible = 0xFFFE;

}  // namespace

AudioClip read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::kIoError, "cannot open WAV: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 ||
      bytes.compare(8, 4, "WAVE") != 0)
    raise(ErrorCode::kParseError, "not a RIFF/WAVE file: " + path);

  LeReader r{reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), 12};

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  const char* data_ptr = nullptr;
  size_t data_len = 0;

  while (r.pos + 8 <= r.len) {
    char id[4];
    r.take(id, 4);
    uint32_t chunk_len = r.u32();
    size_t body = r.pos;
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_len < 16) raise(ErrorCode::kParseError, "short fmt chunk: " + path);
      format = r.u16();
      channels = r.u16();
      rate = r.u32();
      r.u32();  // byte rate
      r.u16();  // block align
      bits = r.u16();
      if (format == kWaveExtensible && chunk_len >= 40) {
        r.u16();  // cbSize
        r.u16();  // valid bits
        r.u32();  // channel mask
        format = r.u16();  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_ptr = bytes.data() + body;
      data_len = std::min<size_t>(chunk_len, bytes.size() - body);
    }
    r.pos = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data_ptr == nullptr)
    raise(ErrorCode::kParseError, "missing fmt/data chunk: " + path);
  if (channels == 0 || rate == 0)
    raise(ErrorCode::kParseError, "invalid WAV header: " + path);

  size_t bytes_per = bits / 8;
  if (bytes_per == 0) raise(ErrorCode::kParseError, "invalid bit depth: " + path);
  size_t n_frames = data_len / (bytes_per * channels);

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.samples.resize(n_frames);

  if (format == kWavePcm && bits == 16) {
    const auto* s = reinterpret_cast<const int16_t*>(data_ptr);
    for (size_t i = 0; i < n_frames; ++i) {
      double acc = 0.0;
      for (size_t c = 0; c < channels; ++c) acc += s[i * channels + c];
      clip.samples[i] = acc / (32768.0 * channels);
    }
  } else if (format == kWaveFloat && bits == 32) {
    const auto* s = reinterpret_cast<const float*>(data_ptr);
    for (size_t i = 0; i < n_frames; ++i) {
      double acc = 0.0;
      for (size_t c = 0; c < channels; ++c) acc += s[i * channels + c];
      clip.samples[i] = acc / channels;
    }
  } else {
    raise(ErrorCode::kParseError,
          "unsupported WAV encoding (want PCM16 or float32): " + path);
  }
  return clip;
}

void write_wav(const std::string& path, const AudioClip& clip, WavFormat format) {
  validate_clip(clip, "write_wav");
  const uint16_t channels = 1;
  const uint16_t bits = format == WavFormat::kPcm16 ? 16 : 32;
  const uint16_t fmt_tag = format == WavFormat::kPcm16 ? kWavePcm : kWaveFloat;
  const uint32_t data_len =
      static_cast<uint32_t>(clip.samples.size() * (bits / 8));

  std::string out;
  out.reserve(44 + data_len);
  out.append("RIFF");
  put_u32(out, 36 + data_len);
  out.append("WAVE");
  out.append("fmt ");
  put_u32(out, 16);
  put_u16(out, fmt_tag);
  put_u16(out, channels);
  put_u32(out, static_cast<uint32_t>(clip.sample_rate));
  put_u32(out, static_cast<uint32_t>(clip.sample_rate) * channels * (bits / 8));
  put_u16(out, channels * (bits / 8));
  put_u16(out, bits);
  out.append("data");
  put_u32(out, data_len);

  if (format == WavFormat::kPcm16) {
    for (double s : clip.samples) {
      const long v = std::lrint(std::clamp(s, -1.0, 1.0) * 32768.0);
      const auto q = static_cast<int16_t>(std::clamp<long>(v, -32768, 32767));
      out.append(reinterpret_cast<const char*>(&q), 2);
    }
  } else {
    for (double s : clip.samples) {
      auto f = static_cast<float>(s);
      out.append(reinterpret_cast<const char*>(&f), 4);
    }
  }

  std::ofstream of(path, std::ios::binary | std::ios::trunc);
  if (!of) raise(ErrorCode::kIoError, "cannot open for writing: " + path);
  of.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!of) raise(ErrorCode::kIoError, "short write: " + path);
}

AudioClip resample(const AudioClip& clip, int target_rate) {
  validate_clip(clip, "resample");
  if (target_rate <= 0)
    raise(ErrorCode::kInvalidArgument, "resample: target_rate must be positive");
  if (target_rate == clip.sample_rate || clip.empty()) {
    AudioClip out = clip;
    out.sample_rate = target_rate;
    return out;
  }

  const double ratio = static_cast<double>(target_rate) / clip.sample_rate;
  const double cutoff = std::min(1.0, ratio);  // normalized to input Nyquist
  const int zero_crossings = 32;
  const double half_width = zero_crossings / cutoff;
  const auto n_in = static_cast<int64_t>(clip.samples.size());
  const auto n_out = static_cast<int64_t>(std::llround(n_in * ratio));

  AudioClip out;
  out.sample_rate = target_rate;
  out.samples.resize(static_cast<size_t>(n_out));

  for (int64_t i = 0; i < n_out; ++i) {
    const double t = i / ratio;
    const auto j0 = static_cast<int64_t>(std::ceil(t - half_width));
    const auto j1 = static_cast<int64_t>(std::floor(t + half_width));
    double acc = 0.0, norm = 0.0;
    for (int64_t j = std::max<int64_t>(0, j0); j <= std::min(n_in - 1, j1); ++j) {
      const double x = t - j;
      const double sinc =
          x == 0.0 ? 1.0
                   : std::sin(M_PI * cutoff * x) / (M_PI * cutoff * x);
      const double u = x / half_width;  // in [-1, 1]
      const double win = 0.5 + 0.5 * std::cos(M_PI * u);
      const double k = sinc * win;
      acc += clip.samples[static_cast<size_t>(j)] * k;
      norm += k;
    }
    out.samples[static_cast<size_t>(i)] = norm > 1e-12 ? acc / norm * 1.0 : 0.0;
  }
  return out;
}

}  // namespace lasskit
