// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace lasskit {

// In-place complex FFT. Radix-2 for power-of-two sizes, O(n^2) direct DFT
// otherwise. Deterministic and safe to call concurrently.
void fft_inplace(std::vector<std::complex<double>>& data, bool inverse);

// Real-input forward transform, one-sided: returns n/2+1 bins (n even).
std::vector<std::complex<double>> rfft(std::span<const double> input);

// One-sided inverse: accepts arbitrary complex bins (imaginary parts at DC
// and Nyquist do not contribute), returns the real part of length n.
std::vector<double> irfft(std::span<const std::complex<double>> bins, size_t n);

}  // namespace lasskit
