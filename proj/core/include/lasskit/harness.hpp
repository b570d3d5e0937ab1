// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lasskit/manifest.hpp"
#include "lasskit/metrics.hpp"
#include "lasskit/model.hpp"
#include "lasskit/query.hpp"

namespace lasskit {

// One benchmark item. Rebuilding from (protocol, params, seed, corpus)
// reproduces the record bit-exactly, audio included.
struct MixtureRecord {
  std::string id;
  std::string mixture_path;     // relative to the set directory
  std::string target_ref_path;  // relative to the set directory
  std::string query;
  std::string protocol;
  double snr_db = 0.0;
  uint64_t seed = 0;
  double clip_guard_scale = 1.0;
};

struct BenchmarkSet {
  std::string protocol;
  std::vector<MixtureRecord> records;
  uint64_t master_seed = 0;
  int sample_rate = 0;
  std::string corpus_fingerprint;
  std::map<std::string, double> params;  // numeric protocol parameters
};

// Contiguous window of the requested length with maximal RMS over a 100 ms
// stride scan; ties take the earliest.
AudioClip anchor_segment(const AudioClip& clip, double seg_seconds);

// ---- protocol builders ----
// Each builder writes float32 WAVs under <out_dir>/audio/ plus
// <out_dir>/set.json and returns the set.

// Anchor pairs mixed at 0 dB, per_class mixtures per label class, query is
// the class label.
BenchmarkSet build_pairs_0db(const CorpusManifest& corpus, int per_class,
                             double seg_seconds, uint64_t seed, int sample_rate,
                             const std::string& out_dir);

// Target/interferer each normalized to an independent uniform loudness in
// [lufs_lo, lufs_hi], summed, clip-guarded jointly; query is the target
// label.
BenchmarkSet build_pairs_lufs(const CorpusManifest& corpus,
                              const std::vector<std::string>& clean_ids,
                              int n_per, double lufs_lo, double lufs_hi,
                              uint64_t seed, int sample_rate,
                              const std::string& out_dir);

// Caption-queried 0 dB pairs against label-disjoint backgrounds,
// n_backgrounds mixtures per captioned target.
BenchmarkSet build_pairs_caption(const CorpusManifest& corpus, int n_backgrounds,
                                 uint64_t seed, int sample_rate,
                                 const std::string& out_dir);

// Interferer formed by concatenating two random clips and truncating to the
// target length; 0 dB; caption query; n_per mixtures per target.
BenchmarkSet build_pairs_concat(const CorpusManifest& corpus, int n_per,
                                uint64_t seed, int sample_rate,
                                const std::string& out_dir);

// n_total label-disjoint pairs at SNR ~ Uniform(snr_lo, snr_hi).
BenchmarkSet build_pairs_snr_range(const CorpusManifest& corpus, int n_total,
                                   double snr_lo, double snr_hi, uint64_t seed,
                                   int sample_rate, const std::string& out_dir);

void save_benchmark_set(const BenchmarkSet& set, const std::string& out_dir);
BenchmarkSet load_benchmark_set(const std::string& dir);

// ---- evaluation ----

enum class EvalEngine { kModel, kPassthrough, kOracle };

struct EvalOptions {
  EvalEngine engine = EvalEngine::kModel;
  int jobs = 1;
  const std::map<std::string, QueryEmbedding>* external_embeddings = nullptr;
  std::string query_override;  // replaces every record's query when set
  StftConfig oracle_stft;      // analysis config for the oracle engine
  std::string dataset_name;    // defaults to the set's protocol
};

// Runs the engine over every record and aggregates. Records whose query
// cannot be embedded are marked failed and excluded from aggregates but
// always counted. Output is independent of `jobs`.
MetricReport evaluate(const SeparatorModel* model, const BenchmarkSet& set,
                      const std::string& set_dir, const EvalOptions& opts);

enum class ReportFormat { kCsv, kJson, kMarkdown };

// Multi-dataset report emission with a stable column order; JSON re-emits
// byte-identically after a parse round trip. Refuses empty reports.
void emit_report(const std::vector<MetricReport>& reports, ReportFormat format,
                 const std::string& path);

}  // namespace lasskit
