// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include "lasskit/common.hpp"
#include "lasskit/fft.hpp"
#include "lasskit/rng.hpp"
#include "support/test_util.hpp"

using namespace lasskit;

TEST_SUITE_BEGIN("fft");

TEST_CASE("radix-2 forward matches the direct DFT") {
  for (size_t n : {16u, 64u, 1024u}) {
    Rng rng(n);
    std::vector<std::complex<double>> x(n);
    for (auto& v : x) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    auto want = test::naive_dft(x);
    auto got = x;
    fft_inplace(got, false);
    for (size_t i = 0; i < n; ++i)
      CHECK(std::abs(got[i] - want[i]) < 1e-9 * std::sqrt(double(n)));
  }
}

TEST_CASE("non-power-of-two sizes fall back to the direct transform") {
  Rng rng(7);
  std::vector<std::complex<double>> x(12);
  for (auto& v : x) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  auto want = test::naive_dft(x);
  auto got = x;
  fft_inplace(got, false);
  for (size_t i = 0; i < x.size(); ++i) CHECK(std::abs(got[i] - want[i]) < 1e-10);
}

TEST_CASE("inverse undoes forward") {
  Rng rng(3);
  std::vector<std::complex<double>> x(256);
  for (auto& v : x) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  auto y = x;
  fft_inplace(y, false);
  fft_inplace(y, true);
  for (size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y[i] - x[i]) < 1e-12);
}

TEST_CASE("rfft/irfft round trip") {
  Rng rng(11);
  std::vector<double> x(128);
  for (auto& v : x) v = rng.uniform(-1, 1);
  auto bins = rfft(x);
  CHECK(bins.size() == 65);
  auto back = irfft(bins, x.size());
  CHECK(test::max_abs_diff(x, back) < 1e-12);
}

TEST_CASE("irfft ignores imaginary parts at DC and Nyquist") {
  std::vector<std::complex<double>> bins(9, {0.0, 0.0});
  bins[0] = {1.0, 0.5};
  bins[8] = {2.0, -0.7};
  auto a = irfft(bins, 16);
  bins[0] = {1.0, 0.0};
  bins[8] = {2.0, 0.0};
  auto b = irfft(bins, 16);
  CHECK(test::max_abs_diff(a, b) < 1e-14);
}

TEST_CASE("rfft rejects odd or empty sizes") {
  std::vector<double> odd(15, 0.0);
  CHECK_THROWS_AS((void)rfft(odd), Error);
  std::vector<std::complex<double>> bins(8);
  CHECK_THROWS_AS((void)irfft(bins, 16), Error);  // wants 9 bins
}

TEST_SUITE_END();
