// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lasskit/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "lasskit/common.hpp"
#include "lasskit/rng.hpp"

namespace lasskit {

namespace {

void check_pair(const AudioClip& est, const AudioClip& ref, const char* op) {
  if (est.size() != ref.size())
    raise(ErrorCode::kInvalidArgument, std::string(op) + ": length mismatch");
  if (ref.empty()) raise(ErrorCode::kInvalidArgument, std::string(op) + ": empty input");
}

double clamp_db(double v) { return std::clamp(v, -kMetricCapDb, kMetricCapDb); }

double ratio_db(double num, double den) {
  if (den <= 0.0) return kMetricCapDb;
  if (num <= 0.0) return -kMetricCapDb;
  return clamp_db(10.0 * std::log10(num / den));
}

}  // namespace

double sdr(const AudioClip& est, const AudioClip& ref) {
  check_pair(est, ref, "sdr");
  double e_ref = 0.0, e_err = 0.0;
  for (size_t i = 0; i < ref.size(); ++i) {
    const double r = ref.samples[i];
    const double d = r - est.samples[i];
    e_ref += r * r;
    e_err += d * d;
  }
  if (e_ref <= 0.0) raise(ErrorCode::kSilentSource, "sdr: silent reference");
  return ratio_db(e_ref, e_err);
}

double si_sdr(const AudioClip& est, const AudioClip& ref) {
  check_pair(est, ref, "si_sdr");
  const size_t n = ref.size();
  double mean_e = 0.0, mean_r = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mean_e += est.samples[i];
    mean_r += ref.samples[i];
  }
  mean_e /= static_cast<double>(n);
  mean_r /= static_cast<double>(n);

  double dot = 0.0, e_ref = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double e = est.samples[i] - mean_e;
    const double r = ref.samples[i] - mean_r;
    dot += e * r;
    e_ref += r * r;
  }
  if (e_ref <= 0.0) raise(ErrorCode::kSilentSource, "si_sdr: silent reference");
  const double a = dot / e_ref;  // projection gain
  double e_t = 0.0, e_n = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double e = est.samples[i] - mean_e;
    const double r = ref.samples[i] - mean_r;
    const double t = a * r;
    e_t += t * t;
    e_n += (e - t) * (e - t);
  }
  return ratio_db(e_t, e_n);
}

double sdri(const AudioClip& est, const AudioClip& mix, const AudioClip& ref) {
  return sdr(est, ref) - sdr(mix, ref);
}

double ssnr(const AudioClip& est, const AudioClip& ref, double frame_ms,
            double clamp_lo, double clamp_hi) {
  check_pair(est, ref, "ssnr");
  const auto frame =
      static_cast<size_t>(std::lround(frame_ms * 1e-3 * ref.sample_rate));
  if (frame < 2 || frame > ref.size())
    raise(ErrorCode::kInvalidArgument, "ssnr: bad frame length");
  const size_t hop = frame / 2;

  double acc = 0.0;
  size_t n_frames = 0;
  for (size_t start = 0; start + frame <= ref.size(); start += hop) {
    double e_ref = 0.0, e_err = 0.0;
    for (size_t i = start; i < start + frame; ++i) {
      const double r = ref.samples[i];
      const double d = r - est.samples[i];
      e_ref += r * r;
      e_err += d * d;
    }
    if (e_ref <= 1e-10) continue;
    double v = e_err <= 0.0 ? clamp_hi : 10.0 * std::log10(e_ref / e_err);
    acc += std::clamp(v, clamp_lo, clamp_hi);
    ++n_frames;
  }
  if (n_frames == 0)
    raise(ErrorCode::kSilentSource, "ssnr: no reference frame above the energy floor");
  return acc / static_cast<double>(n_frames);
}

double pairwise_sum(const double* x, size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

double pairwise_mean(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  return pairwise_sum(x.data(), x.size()) / static_cast<double>(x.size());
}

namespace {

Aggregate bootstrap(const std::vector<double>& values, Rng& rng) {
  Aggregate a;
  a.mean = pairwise_mean(values);
  if (values.size() < 2) {
    a.ci_lo = a.ci_hi = a.mean;
    return a;
  }
  constexpr int kB = 1000;
  std::vector<double> means(kB);
  std::vector<double> sample(values.size());
  for (int b = 0; b < kB; ++b) {
    for (auto& s : sample) s = values[rng.index(values.size())];
    means[static_cast<size_t>(b)] = pairwise_mean(sample);
  }
  std::sort(means.begin(), means.end());
  a.ci_lo = means[static_cast<size_t>(std::floor(0.025 * (kB - 1)))];
  a.ci_hi = means[static_cast<size_t>(std::ceil(0.975 * (kB - 1)))];
  return a;
}

}  // namespace

MetricReport aggregate_report(const std::string& dataset,
                              std::vector<ItemMetrics> items) {
  MetricReport r;
  r.dataset = dataset;
  r.version = kVersion;
  r.items = std::move(items);

  std::vector<double> v_sdr, v_si, v_sdri, v_ssnr;
  for (const auto& it : r.items) {
    if (it.failed) {
      ++r.n_failed;
      continue;
    }
    ++r.n_evaluated;
    v_sdr.push_back(it.sdr_db);
    v_si.push_back(it.si_sdr_db);
    v_sdri.push_back(it.sdri_db);
    v_ssnr.push_back(it.ssnr_db);
  }
  Rng rng(0xB007ULL);  // fixed: reports are reproducible byte-for-byte
  r.sdr_agg = bootstrap(v_sdr, rng);
  r.si_sdr_agg = bootstrap(v_si, rng);
  r.sdri_agg = bootstrap(v_sdri, rng);
  r.ssnr_agg = bootstrap(v_ssnr, rng);
  return r;
}

}  // namespace lasskit
