// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lasskit/model.hpp"

namespace lasskit {

enum class BlobDtype { kF32, kF64 };

// Optimizer / trainer state carried alongside the model for exact resume.
struct CheckpointExtra {
  std::vector<std::pair<std::string, Tensor>> opt_tensors;  // "adam.m.*", "adam.v.*"
  int64_t adam_step = 0;
  int64_t train_step = 0;
  uint64_t rng_seed = 0;
};

// File layout: "LKP1" magic, little-endian u64 JSON header length, the JSON
// header (config, vocabulary, tensor manifest with name/shape/dtype/offset,
// format version, RNG seed), then the raw little-endian tensor blob.
// Identical inputs serialize to identical bytes.
void save_checkpoint(const std::string& path, const SeparatorModel& model,
                     BlobDtype dtype = BlobDtype::kF32,
                     const CheckpointExtra* extra = nullptr);

struct LoadedCheckpoint {
  SeparatorModel model;
  CheckpointExtra extra;
  BlobDtype dtype = BlobDtype::kF32;
  bool has_optimizer = false;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace lasskit
