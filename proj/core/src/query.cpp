// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lasskit/query.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "lasskit/common.hpp"
#include "lasskit/rng.hpp"

namespace lasskit {

std::string canonicalize_query(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  bool in_space = true;  // drops leading whitespace
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) out.push_back(' ');
    in_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

double l2_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void l2_normalize(std::vector<double>& v) {
  const double n = l2_norm(v);
  if (n < 1e-12)
    raise(ErrorCode::kInvalidArgument, "cannot normalize a zero vector");
  for (double& x : v) x /= n;
}

int Vocabulary::find(const std::string& canonical_key) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), canonical_key);
  if (it == entries.end() || *it != canonical_key) return -1;
  return static_cast<int>(it - entries.begin());
}

Vocabulary build_vocab(const std::vector<std::string>& labels, int d,
                       uint64_t seed) {
  if (labels.empty())
    raise(ErrorCode::kInvalidArgument, "build_vocab: empty label list");
  if (d <= 0) raise(ErrorCode::kInvalidArgument, "build_vocab: d must be positive");

  std::set<std::string> keys;
  for (const auto& l : labels) {
    std::string k = canonicalize_query(l);
    if (!k.empty()) keys.insert(std::move(k));
  }
  if (keys.empty())
    raise(ErrorCode::kInvalidArgument, "build_vocab: no non-empty labels");

  Vocabulary v;
  v.dim = d;
  v.entries.assign(keys.begin(), keys.end());
  v.table.resize(v.entries.size() * static_cast<size_t>(d));
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  Rng rng(seed);
  for (double& x : v.table) x = rng.uniform(-bound, bound);
  return v;
}

QueryEmbedding embed_query(const Vocabulary& vocab, const std::string& query) {
  const std::string key = canonicalize_query(query);
  const int idx = vocab.find(key);
  if (idx < 0)
    raise(ErrorCode::kUnknownQuery, "unknown query: \"" + key + "\"");
  QueryEmbedding e;
  e.source = EmbeddingSource::kTable;
  e.vector.assign(vocab.row(idx), vocab.row(idx) + vocab.dim);
  l2_normalize(e.vector);
  return e;
}

std::map<std::string, QueryEmbedding> load_external_embeddings(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::kIoError, "cannot open embedding file: " + path);

  std::map<std::string, QueryEmbedding> out;
  std::string line;
  size_t line_no = 0;
  size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      raise(ErrorCode::kParseError, "embedding file " + path + " line " +
                                        std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("key") || !j.contains("vec") ||
        !j["key"].is_string() || !j["vec"].is_array())
      raise(ErrorCode::kParseError,
            "embedding file " + path + " line " + std::to_string(line_no) +
                ": expected {\"key\": string, \"vec\": [numbers]}");

    QueryEmbedding e;
    e.source = EmbeddingSource::kExternal;
    e.vector.reserve(j["vec"].size());
    for (const auto& x : j["vec"]) {
      if (!x.is_number())
        raise(ErrorCode::kParseError, "embedding file " + path + " line " +
                                          std::to_string(line_no) +
                                          ": non-numeric vector entry");
      e.vector.push_back(x.get<double>());
    }
    if (e.vector.empty())
      raise(ErrorCode::kParseError, "embedding file " + path + " line " +
                                        std::to_string(line_no) + ": empty vector");
    if (dim == 0) dim = e.vector.size();
    if (e.vector.size() != dim)
      raise(ErrorCode::kParseError,
            "embedding file " + path + " line " + std::to_string(line_no) +
                ": dimension " + std::to_string(e.vector.size()) +
                " != " + std::to_string(dim));
    l2_normalize(e.vector);
    out[canonicalize_query(j["key"].get<std::string>())] = std::move(e);
  }
  return out;
}

}  // namespace lasskit
