// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "lasskit/audio.hpp"

namespace lasskit {

struct CorpusItem {
  std::string id;
  std::string path;  // resolved (absolute or relative to the working dir)
  std::vector<std::string> labels;
  std::vector<std::string> captions;
  double duration_s = 0.0;
  int sample_rate = 0;
};

struct CorpusManifest {
  std::vector<CorpusItem> items;
  std::vector<std::string> warnings;  // skipped entries, one line each
  size_t n_skipped = 0;

  const CorpusItem* find(const std::string& id) const;
};

// JSONL, one item per line: {"id", "path", "labels", "captions"?,
// "duration_s"?, "sample_rate"?}. Relative paths resolve against the
// manifest's directory; entries whose audio file is missing are skipped
// and counted. Duplicate ids and empty label lists are errors.
CorpusManifest load_manifest(const std::string& path);

// Content hash over item metadata and audio bytes, order-sensitive.
std::string corpus_fingerprint(const CorpusManifest& m);

// Loads, downmixes and resamples corpus audio once per (id, rate).
class ClipCache {
 public:
  const AudioClip& get(const CorpusItem& item, int target_rate);

 private:
  std::unordered_map<std::string, AudioClip> cache_;
};

}  // namespace lasskit
