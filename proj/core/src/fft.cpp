// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lasskit/fft.hpp"

#include <cmath>
#include <memory>
#include <mutex>
#include <unordered_map>

#include "lasskit/common.hpp"

namespace lasskit {

namespace {

bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

struct Twiddles {
  // e^{-i 2 pi k / n} for k in [0, n/2)
  std::vector<std::complex<double>> w;
};

std::shared_ptr<const Twiddles> twiddles_for(size_t n) {
  static std::mutex mu;
  static std::unordered_map<size_t, std::shared_ptr<const Twiddles>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  auto t = std::make_shared<Twiddles>();
  t->w.resize(n / 2);
  for (size_t k = 0; k < n / 2; ++k) {
    double a = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
    t->w[k] = {std::cos(a), std::sin(a)};
  }
  cache.emplace(n, t);
  return t;
}

void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
  const size_t n = a.size();
  // bit reversal
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  auto tw = twiddles_for(n);
  for (size_t len = 2; len <= n; len <<= 1) {
    const size_t step = n / len;
    for (size_t i = 0; i < n; i += len) {
      for (size_t k = 0; k < len / 2; ++k) {
        std::complex<double> w = tw->w[k * step];
        if (inverse) w = std::conj(w);
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= inv;
  }
}

void dft_direct(std::vector<std::complex<double>>& a, bool inverse) {
  const size_t n = a.size();
  std::vector<std::complex<double>> out(n);
  const double sign = inverse ? 1.0 : -1.0;
  for (size_t k = 0; k < n; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (size_t j = 0; j < n; ++j) {
      double ang = sign * 2.0 * M_PI * static_cast<double>(k * j % n) /
                   static_cast<double>(n);
      acc += a[j] * std::complex<double>{std::cos(ang), std::sin(ang)};
    }
    out[k] = inverse ? acc / static_cast<double>(n) : acc;
  }
  a.swap(out);
}

}  // namespace

void fft_inplace(std::vector<std::complex<double>>& data, bool inverse) {
  if (data.empty()) return;
  if (is_pow2(data.size())) {
    fft_radix2(data, inverse);
  } else {
    dft_direct(data, inverse);
  }
}

std::vector<std::complex<double>> rfft(std::span<const double> input) {
  const size_t n = input.size();
  if (n == 0 || n % 2 != 0)
    raise(ErrorCode::kInvalidArgument, "rfft: size must be even and non-zero");
  std::vector<std::complex<double>> a(n);
  for (size_t i = 0; i < n; ++i) a[i] = {input[i], 0.0};
  fft_inplace(a, false);
  a.resize(n / 2 + 1);
  return a;
}

std::vector<double> irfft(std::span<const std::complex<double>> bins, size_t n) {
  if (n == 0 || n % 2 != 0 || bins.size() != n / 2 + 1)
    raise(ErrorCode::kInvalidArgument, "irfft: expected n/2+1 bins, n even");
  std::vector<std::complex<double>> a(n);
  for (size_t f = 0; f <= n / 2; ++f) a[f] = bins[f];
  for (size_t f = n / 2 + 1; f < n; ++f) a[f] = std::conj(bins[n - f]);
  fft_inplace(a, true);
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = a[i].real();
  return out;
}

}  // namespace lasskit
