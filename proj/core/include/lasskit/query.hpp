// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace lasskit {

// Lowercase, trim, collapse internal whitespace runs. ASCII-only case
// folding; other UTF-8 bytes pass through unchanged.
std::string canonicalize_query(const std::string& s);

enum class EmbeddingSource { kTable, kExternal };

struct QueryEmbedding {
  std::vector<double> vector;
  EmbeddingSource source = EmbeddingSource::kTable;

  size_t dim() const { return vector.size(); }
};

double l2_norm(const std::vector<double>& v);
void l2_normalize(std::vector<double>& v);

// Closed-vocabulary trainable embedding table: |V| rows of dimension D,
// keyed by canonical query strings in sorted order.
struct Vocabulary {
  std::vector<std::string> entries;  // sorted canonical keys
  std::vector<double> table;         // |V| x D, row-major
  int dim = 0;

  size_t size() const { return entries.size(); }
  // -1 when absent
  int find(const std::string& canonical_key) const;
  const double* row(int index) const {
    return table.data() + static_cast<size_t>(index) * dim;
  }
};

// Rows initialized i.i.d. uniform(-1/sqrt(d), 1/sqrt(d)) from the seed;
// identical inputs and seed reproduce the table bit-for-bit.
Vocabulary build_vocab(const std::vector<std::string>& labels, int d,
                       uint64_t seed);

// L2-normalized table row. Throws kUnknownQuery when the canonicalized
// query is not in the vocabulary.
QueryEmbedding embed_query(const Vocabulary& vocab, const std::string& query);

// JSONL, one {"key": ..., "vec": [...]} per line; keys canonicalized and
// vectors unit-normalized on load. Malformed lines and dimension mismatches
// are reported with their line number.
std::map<std::string, QueryEmbedding> load_external_embeddings(
    const std::string& path);

}  // namespace lasskit
