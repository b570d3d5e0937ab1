// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lasskit/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "lasskit/common.hpp"
#include "lasskit/hash.hpp"

namespace lasskit {

namespace fs = std::filesystem;
using nlohmann::json;

const CorpusItem* CorpusManifest::find(const std::string& id) const {
  for (const auto& it : items)
    if (it.id == id) return &it;
  return nullptr;
}

CorpusManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::kIoError, "cannot open manifest: " + path);
  const fs::path base = fs::path(path).parent_path();

  CorpusManifest m;
  std::set<std::string> seen;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      raise(ErrorCode::kParseError, "manifest " + path + " line " +
                                        std::to_string(line_no) + ": " + e.what());
    }
    CorpusItem item;
    try {
      item.id = j.at("id").get<std::string>();
      item.path = j.at("path").get<std::string>();
      item.labels = j.at("labels").get<std::vector<std::string>>();
      if (j.contains("captions"))
        item.captions = j.at("captions").get<std::vector<std::string>>();
      item.duration_s = j.value("duration_s", 0.0);
      item.sample_rate = j.value("sample_rate", 0);
    } catch (const json::exception& e) {
      raise(ErrorCode::kParseError, "manifest " + path + " line " +
                                        std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.insert(item.id).second)
      raise(ErrorCode::kParseError, "manifest: duplicate id \"" + item.id + "\"");
    if (item.labels.empty())
      raise(ErrorCode::kParseError,
            "manifest: item \"" + item.id + "\" has no labels");

    fs::path p(item.path);
    if (p.is_relative()) p = base / p;
    item.path = p.string();
    if (!fs::exists(p)) {
      m.warnings.push_back("skipped \"" + item.id + "\": missing file " +
                           item.path);
      ++m.n_skipped;
      continue;
    }
    if (item.duration_s <= 0.0 || item.sample_rate <= 0) {
      AudioClip probe = read_wav(item.path);
      item.sample_rate = probe.sample_rate;
      item.duration_s = probe.duration_s();
    }
    m.items.push_back(std::move(item));
  }
  if (m.items.empty())
    raise(ErrorCode::kInvalidArgument, "manifest has zero valid items: " + path);
  return m;
}

std::string corpus_fingerprint(const CorpusManifest& m) {
  Fnv1a h;
  for (const auto& it : m.items) {
    h.update(it.id).update("\x1f");
    for (const auto& l : it.labels) h.update(l).update("\x1f");
    for (const auto& c : it.captions) h.update(c).update("\x1f");
    const uint64_t fh = hash_file(it.path);
    h.update(&fh, sizeof(fh));
  }
  return h.hex();
}

const AudioClip& ClipCache::get(const CorpusItem& item, int target_rate) {
  const std::string key = item.id + "@" + std::to_string(target_rate);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  AudioClip clip = read_wav(item.path);
  if (clip.sample_rate != target_rate) clip = resample(clip, target_rate);
  return cache_.emplace(key, std::move(clip)).first->second;
}

}  // namespace lasskit
