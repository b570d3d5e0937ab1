// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lasskit/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "lasskit/common.hpp"
#include "lasskit/mixing.hpp"
#include "lasskit/parallel.hpp"
#include "lasskit/rng.hpp"
#include "lasskit/stft.hpp"

namespace lasskit {

namespace fs = std::filesystem;
using nlohmann::json;

AudioClip anchor_segment(const AudioClip& clip, double seg_seconds) {
  validate_clip(clip, "anchor_segment");
  const auto seg = static_cast<size_t>(std::lround(seg_seconds * clip.sample_rate));
  if (seg == 0 || seg > clip.size())
    raise(ErrorCode::kShortClip, "anchor_segment: clip shorter than segment");
  const auto stride =
      std::max<size_t>(1, static_cast<size_t>(std::lround(0.100 * clip.sample_rate)));

  std::vector<double> csum(clip.size() + 1, 0.0);
  for (size_t i = 0; i < clip.size(); ++i)
    csum[i + 1] = csum[i] + clip.samples[i] * clip.samples[i];

  size_t best = 0;
  double best_e = -1.0;
  auto consider = [&](size_t start) {
    const double e = csum[start + seg] - csum[start];
    if (e > best_e) {  // strict: ties keep the earliest
      best_e = e;
      best = start;
    }
  };
  for (size_t start = 0; start + seg <= clip.size(); start += stride) consider(start);
  consider(clip.size() - seg);

  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.assign(clip.samples.begin() + static_cast<int64_t>(best),
                     clip.samples.begin() + static_cast<int64_t>(best + seg));
  return out;
}

namespace {

// Stems pass through float32 before alpha is computed so that SNR measured
// from the written files matches the requested value at 1e-6 dB.
AudioClip quantize_f32(const AudioClip& clip) {
  AudioClip out = clip;
  for (double& s : out.samples) s = static_cast<double>(static_cast<float>(s));
  return out;
}

AudioClip crop_or_loop(const AudioClip& clip, size_t len, Rng& rng) {
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  if (clip.size() == len) {
    out.samples = clip.samples;
    return out;
  }
  if (clip.size() > len) {
    const size_t off = rng.index(clip.size() - len + 1);
    out.samples.assign(clip.samples.begin() + static_cast<int64_t>(off),
                       clip.samples.begin() + static_cast<int64_t>(off + len));
    return out;
  }
  std::vector<double> tiled;
  tiled.reserve(len + clip.size());
  while (tiled.size() < len + clip.size())
    tiled.insert(tiled.end(), clip.samples.begin(), clip.samples.end());
  const size_t off = rng.index(tiled.size() - len + 1);
  out.samples.assign(tiled.begin() + static_cast<int64_t>(off),
                     tiled.begin() + static_cast<int64_t>(off + len));
  return out;
}

std::string record_name(const std::string& protocol, size_t idx) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "-%06zu", idx);
  return protocol + buf;
}

std::vector<std::string> sorted_classes(const CorpusManifest& corpus) {
  std::set<std::string> s;
  for (const auto& it : corpus.items)
    for (const auto& l : it.labels) s.insert(l);
  return {s.begin(), s.end()};
}

bool has_label(const CorpusItem& it, const std::string& label) {
  return std::find(it.labels.begin(), it.labels.end(), label) != it.labels.end();
}

bool labels_disjoint(const CorpusItem& a, const CorpusItem& b) {
  for (const auto& l : a.labels)
    if (has_label(b, l)) return false;
  return true;
}

struct SetWriter {
  fs::path dir;
  int sample_rate;

  explicit SetWriter(const std::string& out_dir, int rate)
      : dir(out_dir), sample_rate(rate) {
    fs::create_directories(dir / "audio");
  }
  // returns (mixture_path, ref_path) relative to the set directory
  std::pair<std::string, std::string> write(const std::string& id,
                                            const AudioClip& mix,
                                            const AudioClip& ref) const {
    const std::string mix_rel = "audio/" + id + ".mix.wav";
    const std::string ref_rel = "audio/" + id + ".ref.wav";
    write_wav((dir / mix_rel).string(), mix, WavFormat::kFloat32);
    write_wav((dir / ref_rel).string(), ref, WavFormat::kFloat32);
    return {mix_rel, ref_rel};
  }
};

// Draws a non-silent anchor segment from the pool, retrying across items.
AudioClip pick_anchor(const std::vector<const CorpusItem*>& pool,
                      ClipCache& cache, int rate, double seg_seconds, Rng& rng,
                      const CorpusItem** chosen) {
  for (int attempt = 0; attempt < 32; ++attempt) {
    const CorpusItem* item = pool[rng.index(pool.size())];
    const AudioClip& clip = cache.get(*item, rate);
    const auto seg = static_cast<size_t>(std::lround(seg_seconds * rate));
    if (clip.size() < seg) continue;
    AudioClip a = quantize_f32(anchor_segment(clip, seg_seconds));
    bool silent = true;
    for (double s : a.samples)
      if (s != 0.0) {
        silent = false;
        break;
      }
    if (silent) continue;
    if (chosen != nullptr) *chosen = item;
    return a;
  }
  raise(ErrorCode::kSilentSource,
        "could not draw a non-silent segment after 32 attempts");
}

std::string pick_query(const CorpusItem& item, Rng& rng) {
  if (!item.captions.empty())
    return item.captions[rng.index(item.captions.size())];
  return item.labels[rng.index(item.labels.size())];
}

}  // namespace

BenchmarkSet build_pairs_0db(const CorpusManifest& corpus, int per_class,
                             double seg_seconds, uint64_t seed, int sample_rate,
                             const std::string& out_dir) {
  if (per_class < 1) raise(ErrorCode::kInvalidArgument, "build_pairs_0db: per_class < 1");
  const auto classes = sorted_classes(corpus);
  if (classes.size() < 2)
    raise(ErrorCode::kInvalidArgument, "build_pairs_0db: need at least 2 classes");

  // eligible items per class (long enough to carve an anchor)
  std::map<std::string, std::vector<const CorpusItem*>> by_class;
  for (const auto& c : classes) {
    auto& pool = by_class[c];
    for (const auto& it : corpus.items)
      if (has_label(it, c) && it.duration_s >= seg_seconds) pool.push_back(&it);
    if (pool.empty())
      raise(ErrorCode::kInvalidArgument,
            "build_pairs_0db: class \"" + c + "\" has no eligible clip");
  }

  BenchmarkSet set;
  set.protocol = "0db";
  set.master_seed = seed;
  set.sample_rate = sample_rate;
  set.corpus_fingerprint = corpus_fingerprint(corpus);
  set.params["per_class"] = per_class;
  set.params["seg_seconds"] = seg_seconds;

  SetWriter writer(out_dir, sample_rate);
  ClipCache cache;
  size_t idx = 0;
  for (const auto& c : classes) {
    for (int i = 0; i < per_class; ++i, ++idx) {
      Rng rng(derive_seed(seed, idx));
      AudioClip target = pick_anchor(by_class[c], cache, sample_rate,
                                     seg_seconds, rng, nullptr);
      // interferer from a different class, never carrying the target label
      std::vector<std::string> others;
      for (const auto& oc : classes) {
        if (oc == c) continue;
        bool any = false;
        for (const auto* it : by_class[oc])
          if (!has_label(*it, c)) {
            any = true;
            break;
          }
        if (any) others.push_back(oc);
      }
      if (others.empty())
        raise(ErrorCode::kExhaustedPool,
              "build_pairs_0db: no interferer class available for \"" + c + "\"");
      const std::string oc = others[rng.index(others.size())];
      std::vector<const CorpusItem*> pool;
      for (const auto* it : by_class[oc])
        if (!has_label(*it, c)) pool.push_back(it);
      AudioClip interferer =
          pick_anchor(pool, cache, sample_rate, seg_seconds, rng, nullptr);

      MixResult mix = mix_at_snr(target, interferer, 0.0);
      MixtureRecord rec;
      rec.id = record_name("0db", idx);
      rec.query = c;
      rec.protocol = "0db";
      rec.snr_db = 0.0;
      rec.seed = derive_seed(seed, idx);
      auto [mp, rp] = writer.write(rec.id, mix.mixture, mix.target);
      rec.mixture_path = mp;
      rec.target_ref_path = rp;
      set.records.push_back(std::move(rec));
    }
  }
  save_benchmark_set(set, out_dir);
  return set;
}

BenchmarkSet build_pairs_lufs(const CorpusManifest& corpus,
                              const std::vector<std::string>& clean_ids,
                              int n_per, double lufs_lo, double lufs_hi,
                              uint64_t seed, int sample_rate,
                              const std::string& out_dir) {
  if (n_per < 1) raise(ErrorCode::kInvalidArgument, "build_pairs_lufs: n_per < 1");
  if (!(lufs_lo <= lufs_hi))
    raise(ErrorCode::kInvalidArgument, "build_pairs_lufs: bad loudness range");
  std::set<std::string> clean(clean_ids.begin(), clean_ids.end());
  std::vector<const CorpusItem*> targets;
  for (const auto& id : clean_ids) {
    const CorpusItem* it = corpus.find(id);
    if (it == nullptr)
      raise(ErrorCode::kInvalidArgument, "build_pairs_lufs: unknown clean id " + id);
    targets.push_back(it);
  }
  std::vector<const CorpusItem*> pool;
  for (const auto& it : corpus.items)
    if (!clean.count(it.id)) pool.push_back(&it);
  if (pool.empty())
    raise(ErrorCode::kInvalidArgument, "build_pairs_lufs: interferer pool is empty");
  if (static_cast<size_t>(n_per) > pool.size())
    raise(ErrorCode::kExhaustedPool,
          "build_pairs_lufs: fewer interferers than n_per");

  BenchmarkSet set;
  set.protocol = "lufs";
  set.master_seed = seed;
  set.sample_rate = sample_rate;
  set.corpus_fingerprint = corpus_fingerprint(corpus);
  set.params["n_per"] = n_per;
  set.params["lufs_lo"] = lufs_lo;
  set.params["lufs_hi"] = lufs_hi;

  SetWriter writer(out_dir, sample_rate);
  ClipCache cache;
  size_t idx = 0;
  for (size_t ti = 0; ti < targets.size(); ++ti) {
    // distinct interferer subset per target
    std::vector<size_t> order(pool.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng subset_rng(derive_seed(seed, 0x100000ULL + ti));
    subset_rng.shuffle(order);

    const AudioClip& t_clip = cache.get(*targets[ti], sample_rate);
    for (int j = 0; j < n_per; ++j, ++idx) {
      Rng rng(derive_seed(seed, idx));
      const CorpusItem* inter = pool[order[static_cast<size_t>(j)]];
      const double t_lufs = rng.uniform(lufs_lo, lufs_hi);
      const double i_lufs = rng.uniform(lufs_lo, lufs_hi);
      AudioClip i_clip =
          crop_or_loop(cache.get(*inter, sample_rate), t_clip.size(), rng);
      AudioClip t_n = normalize_to_loudness(quantize_f32(t_clip), t_lufs);
      AudioClip i_n = normalize_to_loudness(quantize_f32(i_clip), i_lufs);

      AudioClip mixture;
      mixture.sample_rate = sample_rate;
      mixture.samples.resize(t_n.size());
      for (size_t s = 0; s < t_n.size(); ++s)
        mixture.samples[s] = t_n.samples[s] + i_n.samples[s];
      const double measured = measure_snr(t_n, i_n);
      auto [guarded, scale] = clip_guard(mixture, 0.9);
      AudioClip ref = t_n;
      if (scale != 1.0)
        for (double& s : ref.samples) s *= scale;

      MixtureRecord rec;
      rec.id = record_name("lufs", idx);
      rec.query = targets[ti]->labels[rng.index(targets[ti]->labels.size())];
      rec.protocol = "lufs";
      rec.snr_db = measured;
      rec.seed = derive_seed(seed, idx);
      rec.clip_guard_scale = scale;
      auto [mp, rp] = writer.write(rec.id, guarded, ref);
      rec.mixture_path = mp;
      rec.target_ref_path = rp;
      set.records.push_back(std::move(rec));
    }
  }
  save_benchmark_set(set, out_dir);
  return set;
}

BenchmarkSet build_pairs_caption(const CorpusManifest& corpus, int n_backgrounds,
                                 uint64_t seed, int sample_rate,
                                 const std::string& out_dir) {
  if (n_backgrounds < 1)
    raise(ErrorCode::kInvalidArgument, "build_pairs_caption: n_backgrounds < 1");

  BenchmarkSet set;
  set.protocol = "caption";
  set.master_seed = seed;
  set.sample_rate = sample_rate;
  set.corpus_fingerprint = corpus_fingerprint(corpus);
  set.params["n_backgrounds"] = n_backgrounds;

  SetWriter writer(out_dir, sample_rate);
  ClipCache cache;
  size_t idx = 0;
  size_t skipped = 0;
  for (size_t ti = 0; ti < corpus.items.size(); ++ti) {
    const CorpusItem& target = corpus.items[ti];
    if (target.captions.empty()) continue;
    std::vector<const CorpusItem*> pool;
    for (const auto& it : corpus.items)
      if (it.id != target.id && labels_disjoint(target, it)) pool.push_back(&it);
    if (pool.empty()) {
      ++skipped;
      continue;
    }
    std::vector<size_t> order(pool.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng subset_rng(derive_seed(seed, 0x200000ULL + ti));
    subset_rng.shuffle(order);

    const AudioClip t_q = quantize_f32(cache.get(target, sample_rate));
    for (int j = 0; j < n_backgrounds; ++j, ++idx) {
      Rng rng(derive_seed(seed, idx));
      const CorpusItem* bg = pool[order[static_cast<size_t>(j) % order.size()]];
      AudioClip bg_aligned = quantize_f32(
          crop_or_loop(cache.get(*bg, sample_rate), t_q.size(), rng));
      MixResult mix = mix_at_snr(t_q, bg_aligned, 0.0);

      MixtureRecord rec;
      rec.id = record_name("caption", idx);
      rec.query = target.captions[rng.index(target.captions.size())];
      rec.protocol = "caption";
      rec.snr_db = 0.0;
      rec.seed = derive_seed(seed, idx);
      auto [mp, rp] = writer.write(rec.id, mix.mixture, mix.target);
      rec.mixture_path = mp;
      rec.target_ref_path = rp;
      set.records.push_back(std::move(rec));
    }
  }
  if (set.records.empty())
    raise(ErrorCode::kInvalidArgument,
          "build_pairs_caption: no captioned target with a disjoint background");
  set.params["skipped_targets"] = static_cast<double>(skipped);
  save_benchmark_set(set, out_dir);
  return set;
}

BenchmarkSet build_pairs_concat(const CorpusManifest& corpus, int n_per,
                                uint64_t seed, int sample_rate,
                                const std::string& out_dir) {
  if (n_per < 1) raise(ErrorCode::kInvalidArgument, "build_pairs_concat: n_per < 1");
  if (corpus.items.size() < 3)
    raise(ErrorCode::kInvalidArgument, "build_pairs_concat: need at least 3 items");

  BenchmarkSet set;
  set.protocol = "concat";
  set.master_seed = seed;
  set.sample_rate = sample_rate;
  set.corpus_fingerprint = corpus_fingerprint(corpus);
  set.params["n_per"] = n_per;

  SetWriter writer(out_dir, sample_rate);
  ClipCache cache;
  size_t idx = 0;
  for (const auto& target : corpus.items) {
    const AudioClip t_q = quantize_f32(cache.get(target, sample_rate));
    for (int j = 0; j < n_per; ++j, ++idx) {
      Rng rng(derive_seed(seed, idx));
      auto pick_other = [&]() -> const CorpusItem* {
        while (true) {
          const CorpusItem* it = &corpus.items[rng.index(corpus.items.size())];
          if (it->id != target.id) return it;
        }
      };
      const CorpusItem* a = pick_other();
      const CorpusItem* b = pick_other();
      const AudioClip& ca = cache.get(*a, sample_rate);
      const AudioClip& cb = cache.get(*b, sample_rate);
      AudioClip cat;
      cat.sample_rate = sample_rate;
      cat.samples.reserve(ca.size() + cb.size());
      cat.samples.insert(cat.samples.end(), ca.samples.begin(), ca.samples.end());
      cat.samples.insert(cat.samples.end(), cb.samples.begin(), cb.samples.end());
      AudioClip interferer;
      interferer.sample_rate = sample_rate;
      if (cat.size() >= t_q.size()) {
        interferer.samples.assign(cat.samples.begin(),
                                  cat.samples.begin() + static_cast<int64_t>(t_q.size()));
      } else {
        interferer = crop_or_loop(cat, t_q.size(), rng);
      }
      interferer = quantize_f32(interferer);
      MixResult mix = mix_at_snr(t_q, interferer, 0.0);

      MixtureRecord rec;
      rec.id = record_name("concat", idx);
      rec.query = pick_query(target, rng);
      rec.protocol = "concat";
      rec.snr_db = 0.0;
      rec.seed = derive_seed(seed, idx);
      auto [mp, rp] = writer.write(rec.id, mix.mixture, mix.target);
      rec.mixture_path = mp;
      rec.target_ref_path = rp;
      set.records.push_back(std::move(rec));
    }
  }
  save_benchmark_set(set, out_dir);
  return set;
}

BenchmarkSet build_pairs_snr_range(const CorpusManifest& corpus, int n_total,
                                   double snr_lo, double snr_hi, uint64_t seed,
                                   int sample_rate, const std::string& out_dir) {
  if (n_total < 1) raise(ErrorCode::kInvalidArgument, "build_pairs_snr_range: n_total < 1");
  if (!(snr_lo <= snr_hi))
    raise(ErrorCode::kInvalidArgument, "build_pairs_snr_range: bad SNR range");

  BenchmarkSet set;
  set.protocol = "snr-range";
  set.master_seed = seed;
  set.sample_rate = sample_rate;
  set.corpus_fingerprint = corpus_fingerprint(corpus);
  set.params["n_total"] = n_total;
  set.params["snr_lo"] = snr_lo;
  set.params["snr_hi"] = snr_hi;

  SetWriter writer(out_dir, sample_rate);
  ClipCache cache;
  for (int i = 0; i < n_total; ++i) {
    Rng rng(derive_seed(seed, static_cast<uint64_t>(i)));
    const CorpusItem* target = nullptr;
    std::vector<const CorpusItem*> pool;
    for (int attempt = 0; attempt < 100 && pool.empty(); ++attempt) {
      pool.clear();
      target = &corpus.items[rng.index(corpus.items.size())];
      for (const auto& it : corpus.items)
        if (it.id != target->id && labels_disjoint(*target, it))
          pool.push_back(&it);
    }
    if (pool.empty())
      raise(ErrorCode::kExhaustedPool,
            "build_pairs_snr_range: no label-disjoint pair available");
    const CorpusItem* inter = pool[rng.index(pool.size())];
    const double snr = rng.uniform(snr_lo, snr_hi);

    const AudioClip t_q = quantize_f32(cache.get(*target, sample_rate));
    AudioClip i_q = quantize_f32(
        crop_or_loop(cache.get(*inter, sample_rate), t_q.size(), rng));
    MixResult mix = mix_at_snr(t_q, i_q, snr);

    MixtureRecord rec;
    rec.id = record_name("snr-range", static_cast<size_t>(i));
    rec.query = pick_query(*target, rng);
    rec.protocol = "snr-range";
    rec.snr_db = snr;
    rec.seed = derive_seed(seed, static_cast<uint64_t>(i));
    auto [mp, rp] = writer.write(rec.id, mix.mixture, mix.target);
    rec.mixture_path = mp;
    rec.target_ref_path = rp;
    set.records.push_back(std::move(rec));
  }
  save_benchmark_set(set, out_dir);
  return set;
}

void save_benchmark_set(const BenchmarkSet& set, const std::string& out_dir) {
  json j;
  j["format_version"] = 1;
  j["kind"] = "lasskit-benchmark-set";
  j["protocol"] = set.protocol;
  j["master_seed"] = set.master_seed;
  j["sample_rate"] = set.sample_rate;
  j["corpus_fingerprint"] = set.corpus_fingerprint;
  j["params"] = set.params;
  json records = json::array();
  for (const auto& r : set.records) {
    json e;
    e["id"] = r.id;
    e["mixture_path"] = r.mixture_path;
    e["target_ref_path"] = r.target_ref_path;
    e["query"] = r.query;
    e["protocol"] = r.protocol;
    e["snr_db"] = r.snr_db;
    e["seed"] = r.seed;
    e["clip_guard_scale"] = r.clip_guard_scale;
    records.push_back(e);
  }
  j["records"] = records;
  fs::create_directories(out_dir);
  std::ofstream out(fs::path(out_dir) / "set.json",
                    std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::kIoError, "cannot write set.json in " + out_dir);
  out << j.dump(2) << "\n";
}

BenchmarkSet load_benchmark_set(const std::string& dir) {
  const fs::path p = fs::path(dir) / "set.json";
  std::ifstream in(p);
  if (!in) raise(ErrorCode::kIoError, "cannot open " + p.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    raise(ErrorCode::kParseError, "bad set.json: " + std::string(e.what()));
  }
  BenchmarkSet set;
  set.protocol = j.at("protocol").get<std::string>();
  set.master_seed = j.at("master_seed").get<uint64_t>();
  set.sample_rate = j.at("sample_rate").get<int>();
  set.corpus_fingerprint = j.at("corpus_fingerprint").get<std::string>();
  if (j.contains("params"))
    set.params = j.at("params").get<std::map<std::string, double>>();
  for (const auto& e : j.at("records")) {
    MixtureRecord r;
    r.id = e.at("id").get<std::string>();
    r.mixture_path = e.at("mixture_path").get<std::string>();
    r.target_ref_path = e.at("target_ref_path").get<std::string>();
    r.query = e.at("query").get<std::string>();
    r.protocol = e.at("protocol").get<std::string>();
    r.snr_db = e.at("snr_db").get<double>();
    r.seed = e.at("seed").get<uint64_t>();
    r.clip_guard_scale = e.at("clip_guard_scale").get<double>();
    set.records.push_back(std::move(r));
  }
  return set;
}

namespace {

AudioClip run_oracle(const AudioClip& mix, const AudioClip& ref,
                     const StftConfig& cfg) {
  const ComplexSpectrogram mix_spec = stft(mix, cfg);
  const ComplexSpectrogram ref_spec = stft(ref, cfg);
  return istft(apply_mask(mix_spec, ideal_mask(mix_spec, ref_spec)));
}

void fit_length(AudioClip& clip, size_t len) {
  if (clip.size() > len) clip.samples.resize(len);
  while (clip.size() < len) clip.samples.push_back(0.0);
}

}  // namespace

MetricReport evaluate(const SeparatorModel* model, const BenchmarkSet& set,
                      const std::string& set_dir, const EvalOptions& opts) {
  if (opts.engine == EvalEngine::kModel && model == nullptr)
    raise(ErrorCode::kInvalidArgument, "evaluate: model engine without a model");
  if (set.records.empty())
    raise(ErrorCode::kInvalidArgument, "evaluate: empty benchmark set");

  std::vector<ItemMetrics> items(set.records.size());
  parallel_for(set.records.size(), opts.jobs, [&](size_t i) {
    const MixtureRecord& rec = set.records[i];
    ItemMetrics im;
    im.id = rec.id;
    try {
      const AudioClip mix = read_wav((fs::path(set_dir) / rec.mixture_path).string());
      const AudioClip ref =
          read_wav((fs::path(set_dir) / rec.target_ref_path).string());

      AudioClip est;
      switch (opts.engine) {
        case EvalEngine::kPassthrough:
          est = mix;
          break;
        case EvalEngine::kOracle:
          est = run_oracle(mix, ref, opts.oracle_stft);
          break;
        case EvalEngine::kModel: {
          const std::string query =
              opts.query_override.empty() ? rec.query : opts.query_override;
          QueryEmbedding eq;
          if (model->vocab_row(query) >= 0) {
            eq = model->embed(query);
          } else if (opts.external_embeddings != nullptr) {
            auto it = opts.external_embeddings->find(canonicalize_query(query));
            if (it == opts.external_embeddings->end())
              raise(ErrorCode::kUnknownQuery, "unknown query: " + query);
            eq = it->second;
            if (static_cast<int>(eq.dim()) != model->config.model.d_query)
              raise(ErrorCode::kShapeMismatch,
                    "external embedding dimension mismatch for: " + query);
          } else {
            raise(ErrorCode::kUnknownQuery,
                  "unknown query with no external embeddings: " + query);
          }
          const int model_rate = model->config.sample_rate;
          AudioClip input =
              mix.sample_rate == model_rate ? mix : resample(mix, model_rate);
          AudioClip out = forward(*model, input, eq).separated;
          est = out.sample_rate == mix.sample_rate
                    ? out
                    : resample(out, mix.sample_rate);
          break;
        }
      }
      fit_length(est, ref.size());
      im.sdr_db = sdr(est, ref);
      im.si_sdr_db = si_sdr(est, ref);
      im.sdri_db = sdri(est, mix, ref);
      im.ssnr_db = ssnr(est, ref);
      im.clamped = std::abs(im.sdr_db) >= kMetricCapDb ||
                   std::abs(im.si_sdr_db) >= kMetricCapDb;
    } catch (const Error& e) {
      im.failed = true;
      im.fail_reason = std::string(error_code_name(e.code())) + ": " + e.what();
    }
    items[i] = std::move(im);
  });

  const std::string name =
      opts.dataset_name.empty() ? set.protocol : opts.dataset_name;
  return aggregate_report(name, std::move(items));
}

namespace {

std::string fmt_db(double v, int prec = 6) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

json report_to_json(const MetricReport& r) {
  auto agg = [](const Aggregate& a) {
    json j;
    j["mean"] = a.mean;
    j["ci95_lo"] = a.ci_lo;
    j["ci95_hi"] = a.ci_hi;
    return j;
  };
  json j;
  j["dataset"] = r.dataset;
  j["version"] = r.version;
  j["n_evaluated"] = r.n_evaluated;
  j["n_failed"] = r.n_failed;
  j["sdr"] = agg(r.sdr_agg);
  j["si_sdr"] = agg(r.si_sdr_agg);
  j["sdri"] = agg(r.sdri_agg);
  j["ssnr"] = agg(r.ssnr_agg);
  return j;
}

}  // namespace

void emit_report(const std::vector<MetricReport>& reports, ReportFormat format,
                 const std::string& path) {
  if (reports.empty())
    raise(ErrorCode::kInvalidArgument, "emit_report: no reports to emit");
  for (const auto& r : reports)
    if (r.items.empty())
      raise(ErrorCode::kInvalidArgument,
            "emit_report: report \"" + r.dataset + "\" has no records");

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::kIoError, "cannot write report: " + path);

  switch (format) {
    case ReportFormat::kCsv: {
      out << "dataset,id,sdr_db,si_sdr_db,sdri_db,ssnr_db,clamped,failed,"
             "fail_reason\n";
      for (const auto& r : reports)
        for (const auto& it : r.items) {
          out << r.dataset << ',' << it.id << ',';
          if (it.failed) {
            out << ",,,,";
          } else {
            out << fmt_db(it.sdr_db) << ',' << fmt_db(it.si_sdr_db) << ','
                << fmt_db(it.sdri_db) << ',' << fmt_db(it.ssnr_db) << ',';
            out << (it.clamped ? 1 : 0);
          }
          out << ',' << (it.failed ? 1 : 0) << ',';
          std::string reason = it.fail_reason;
          std::replace(reason.begin(), reason.end(), ',', ';');
          out << reason << "\n";
        }
      break;
    }
    case ReportFormat::kJson: {
      json j;
      j["format_version"] = 1;
      j["kind"] = "lasskit-metric-report";
      json ds = json::array();
      for (const auto& r : reports) ds.push_back(report_to_json(r));
      j["datasets"] = ds;
      out << j.dump(2) << "\n";
      break;
    }
    case ReportFormat::kMarkdown: {
      out << "| Dataset | SI-SDR (dB) | SDRi (dB) | SDR (dB) | SSNR (dB) | "
             "Items | Failed |\n";
      out << "|---|---|---|---|---|---|---|\n";
      for (const auto& r : reports) {
        auto cell = [](const Aggregate& a) {
          return fmt_db(a.mean, 2) + " [" + fmt_db(a.ci_lo, 2) + ", " +
                 fmt_db(a.ci_hi, 2) + "]";
        };
        out << "| " << r.dataset << " | " << cell(r.si_sdr_agg) << " | "
            << cell(r.sdri_agg) << " | " << cell(r.sdr_agg) << " | "
            << cell(r.ssnr_agg) << " | " << r.n_evaluated << " | " << r.n_failed
            << " |\n";
      }
      break;
    }
  }
  if (!out) raise(ErrorCode::kIoError, "short report write: " + path);
}

}  // namespace lasskit
