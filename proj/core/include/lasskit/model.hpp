// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "lasskit/audio.hpp"
#include "lasskit/autograd.hpp"
#include "lasskit/query.hpp"
#include "lasskit/stft.hpp"
#include "lasskit/tensor.hpp"

namespace lasskit {

enum class Downsample { kAvgPool2x2 };

struct ModelConfig {
  int n_encoder_blocks = 3;
  int n_bottleneck_blocks = 2;
  std::vector<int> channels = {8, 16, 32};  // per encoder block output
  int kernel = 3;
  double leaky_slope = 0.01;
  int d_query = 64;
  double mask_ceiling = 2.0;
  Downsample downsample = Downsample::kAvgPool2x2;
  int residual_units = 2;  // residual conv units per block
  int film_hidden = 0;     // 0: defaults to d_query

  void validate() const;
  int film_hidden_dim() const { return film_hidden > 0 ? film_hidden : d_query; }
};

struct SeparatorConfig {
  ModelConfig model;
  StftConfig stft;
  int sample_rate = 32000;
};

// Flat parameter store with stable iteration order; running batch-norm
// statistics live here as non-trainable entries.
struct ModelParams {
  struct Entry {
    std::string name;
    Tensor tensor;
    bool trainable = true;
  };
  std::vector<Entry> entries;
  std::unordered_map<std::string, size_t> index;

  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index.count(name) > 0; }
  void add(const std::string& name, Tensor t, bool trainable);
  int64_t total_elements() const;
  int64_t trainable_elements() const;
};

// Derived layer plan shared by init, the graph builder and checkpointing.
struct ModelPlan {
  struct Unit {
    std::string prefix;
    int in_ch = 0;
    int out_ch = 0;
  };
  struct Block {
    std::string prefix;
    std::vector<Unit> units;
  };
  std::vector<Block> encoder;
  std::vector<Block> bottleneck;
  std::vector<Block> decoder;
  struct Up {
    std::string prefix;
    int in_ch = 0;
    int out_ch = 0;
  };
  std::vector<Up> ups;  // one per decoder block
  int head_in = 0;
  std::vector<int> film_channels;  // per modulated conv layer
  int film_total = 0;              // sum of 2*m over modulated layers
};

ModelPlan make_plan(const ModelConfig& cfg);

// Per-layer modulation vectors.
struct FilmParams {
  std::vector<double> gamma;
  std::vector<double> beta;
};

struct SeparatorModel {
  SeparatorConfig config;
  ModelParams params;
  std::vector<std::string> vocab;  // canonical keys for rows of query.table

  int vocab_row(const std::string& query) const;  // -1 when absent
  // Table row, unit-normalized. Throws kUnknownQuery when absent.
  QueryEmbedding embed(const std::string& query) const;
};

// Fresh parameters: conv/FC weights uniform(+-1/sqrt(fan_in)), batch-norm
// at identity, FiLM generator final layer zeroed (identity modulation at
// init), mask head zeroed with phase bias (1, 0) so the initial mask is
// (mask_ceiling/2, zero rotation). The vocabulary table is adopted as-is.
SeparatorModel init_model(const SeparatorConfig& cfg, const Vocabulary& vocab,
                          uint64_t seed);

// gamma_i * H_i + beta_i per channel, broadcast over (h, w). h is (C,H,W).
Tensor apply_film(const Tensor& h, const FilmParams& p);

// Two fully connected layers with ReLU between; gamma = 1 + raw so a zeroed
// final layer yields identity modulation. One FilmParams per modulated conv
// layer, in network order.
std::vector<FilmParams> film_generator(const ModelParams& params,
                                       const ModelPlan& plan,
                                       const QueryEmbedding& e_q);

struct ResidualUnitParams {
  Tensor bn1_gamma, bn1_beta, bn1_mean, bn1_var;
  Tensor conv1_w, conv1_b;
  Tensor bn2_gamma, bn2_beta, bn2_mean, bn2_var;
  Tensor conv2_w, conv2_b;
  Tensor shortcut_w, shortcut_b;  // empty when channel counts match
  double leaky_slope = 0.01;
};

// Pre-activation residual unit: x + [BN -> LeakyReLU -> Conv -> FiLM] x 2,
// 1x1-conv shortcut when channel counts differ. h is (C,H,W); FiLM params
// for the unit's two conv layers.
Tensor residual_conv_block(const Tensor& h, const ResidualUnitParams& p,
                           const FilmParams& film1, const FilmParams& film2,
                           bool training);

struct ForwardResult {
  AudioClip separated;
  MaskPair mask;
};

// Full separation pipeline for one clip; inference mode (running statistics,
// no gradient bookkeeping).
ForwardResult forward(const SeparatorModel& model, const AudioClip& mixture,
                      const QueryEmbedding& e_q);

// ---- training-facing graph builder ----

struct ForwardGraph {
  std::unique_ptr<Tape> tape;
  std::unordered_map<std::string, VarId> param_ids;
  std::vector<ComplexSpectrogram> mix_specs;  // referenced by the tape
  std::vector<BnBatchStats> bn_stats;         // proposed running updates
  VarId wave;       // (N, L)
  VarId mask_mag;   // (N, T, F)
  VarId mask_phase; // (N, T, F)
  VarId loss;       // valid when refs were provided
};

struct ForwardOptions {
  bool training = false;     // batch statistics + gradient tracking
  // queries, one of:
  std::vector<int> vocab_rows;      // rows into query.table
  Tensor external_eq;               // (N, D) unit rows, bypasses the table
  // optional L1 target
  const Tensor* refs = nullptr;     // (N, L)
  const Tensor* l1_include = nullptr;  // tie-exclusion mask for grad checks
};

ForwardGraph build_forward(const SeparatorModel& model,
                           const std::vector<AudioClip>& mixtures,
                           const ForwardOptions& opts);

// Folds proposed batch statistics into the running estimates
// (running = momentum * running + (1 - momentum) * batch).
void commit_bn_stats(ModelParams& params,
                     const std::vector<BnBatchStats>& stats,
                     double momentum = 0.99);

}  // namespace lasskit
