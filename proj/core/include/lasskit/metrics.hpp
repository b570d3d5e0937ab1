// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <vector>

#include "lasskit/audio.hpp"

namespace lasskit {

// All ratios are reported in dB and clamped to [-100, 100]; the 100 dB cap
// stands in for the exact-reconstruction infinity so aggregates stay finite.
inline constexpr double kMetricCapDb = 100.0;

double sdr(const AudioClip& est, const AudioClip& ref);

// Zero-mean, scale-invariant SDR; -100 dB sentinel when the estimate is
// orthogonal to the reference.
double si_sdr(const AudioClip& est, const AudioClip& ref);

// SDR(est, ref) - SDR(mix, ref).
double sdri(const AudioClip& est, const AudioClip& mix, const AudioClip& ref);

// Frame-wise SNR, clamped per frame and averaged over frames with reference
// energy above 1e-10.
double ssnr(const AudioClip& est, const AudioClip& ref, double frame_ms = 32.0,
            double clamp_lo = -10.0, double clamp_hi = 35.0);

struct ItemMetrics {
  std::string id;
  double sdr_db = 0.0;
  double si_sdr_db = 0.0;
  double sdri_db = 0.0;
  double ssnr_db = 0.0;
  bool clamped = false;  // any metric hit the display cap
  bool failed = false;   // excluded from aggregates
  std::string fail_reason;
};

struct Aggregate {
  double mean = 0.0;
  double ci_lo = 0.0;  // 95 % bootstrap interval
  double ci_hi = 0.0;
};

struct MetricReport {
  std::string dataset;
  std::string version;
  std::vector<ItemMetrics> items;
  size_t n_evaluated = 0;
  size_t n_failed = 0;
  Aggregate sdr_agg, si_sdr_agg, sdri_agg, ssnr_agg;
};

// Deterministic pairwise summation.
double pairwise_sum(const double* x, size_t n);
double pairwise_mean(const std::vector<double>& x);

// Means plus seeded percentile-bootstrap intervals (B = 1000) over the
// non-failed items.
MetricReport aggregate_report(const std::string& dataset,
                              std::vector<ItemMetrics> items);

}  // namespace lasskit
