// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lasskit/checkpoint.hpp"
#include "lasskit/manifest.hpp"
#include "lasskit/model.hpp"
#include "lasskit/rng.hpp"

namespace lasskit {

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 4;
  double segment_seconds = 1.0;
  double snr_lo_db = -15.0;
  double snr_hi_db = 15.0;
  int64_t max_steps = 2000;
  uint64_t seed = 0;
  int64_t eval_every = 250;
  int eval_mixtures = 64;

  void validate(const StftConfig& stft, int sample_rate) const;
};

// Mean absolute difference between waveforms.
double l1_loss(const AudioClip& est, const AudioClip& ref);

struct AdamState {
  std::vector<Tensor> m;  // aligned with the trainable entries of ModelParams
  std::vector<Tensor> v;
  int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState init(const ModelParams& params);
};

// Standard bias-corrected Adam over the trainable entries; `grads` follows
// the same order as AdamState::init. Throws kNonFinite on a bad update.
void adam_step(ModelParams& params, const std::vector<Tensor>& grads,
               AdamState& state, double lr);

struct TrainingPair {
  AudioClip target;
  AudioClip interferer;
  std::string query;
};

// Two label-disjoint random segments of segment_seconds; the query is one of
// the target's captions when present, else one of its labels.
TrainingPair sample_training_pair(const CorpusManifest& corpus, ClipCache& cache,
                                  double segment_seconds, int sample_rate,
                                  Rng& rng);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  int64_t checked = 0;
  int64_t tied_samples = 0;  // waveform samples excluded as L1 ties
  bool all_tied = false;     // est == ref everywhere; check skipped
};

// Central-difference verification of the full analytic gradient on a random
// subset of trainable parameters. Near-tie waveform samples (|est-ref| <
// 1e-6) are frozen out of the loss so the finite differences stay smooth.
// `corrupt_index`, when >= 0, multiplies that sampled analytic entry by 1.1
// (negative control: the check must then fail).
GradCheckResult grad_check(const SeparatorModel& model, const AudioClip& mixture,
                           const AudioClip& ref, const std::string& query,
                           double eps = 1e-4, int n_sample = 200,
                           uint64_t seed = 0, int corrupt_index = -1);

struct TrainResult {
  std::string checkpoint_path;
  std::string log_path;
  int64_t steps_done = 0;
  bool aborted_nan = false;
  double last_eval_sdri = 0.0;
};

// Full loop: sample pair -> mix at SNR ~ U(snr range) -> forward -> L1 ->
// backward -> Adam, with periodic held-out SDRi evaluation and f64
// checkpointing (exact resume). The CSV log has columns
// step,loss,eval_sdri,wall_ms; wall_ms is the only nondeterministic column.
TrainResult train(const CorpusManifest& corpus, const CorpusManifest* eval_corpus,
                  const SeparatorConfig& cfg, const TrainConfig& tcfg,
                  const std::string& out_dir,
                  const std::string& resume_checkpoint = "");

}  // namespace lasskit
