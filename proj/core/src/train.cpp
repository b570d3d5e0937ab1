// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lasskit/train.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "lasskit/metrics.hpp"
#include "lasskit/mixing.hpp"

namespace lasskit {

namespace fs = std::filesystem;

void TrainConfig::validate(const StftConfig& stft, int sample_rate) const {
  if (!(learning_rate > 0.0))
    raise(ErrorCode::kInvalidArgument, "TrainConfig: learning_rate must be positive");
  if (batch_size < 1) raise(ErrorCode::kInvalidArgument, "TrainConfig: batch_size < 1");
  if (!(snr_lo_db <= snr_hi_db))
    raise(ErrorCode::kInvalidArgument, "TrainConfig: snr_lo_db > snr_hi_db");
  if (max_steps < 0) raise(ErrorCode::kInvalidArgument, "TrainConfig: max_steps < 0");
  if (eval_every < 1) raise(ErrorCode::kInvalidArgument, "TrainConfig: eval_every < 1");
  const double window_s = static_cast<double>(stft.window_size) / sample_rate;
  if (!(segment_seconds > window_s))
    raise(ErrorCode::kInvalidArgument,
          "TrainConfig: segment must be longer than one STFT window");
}

double l1_loss(const AudioClip& est, const AudioClip& ref) {
  if (est.size() != ref.size())
    raise(ErrorCode::kInvalidArgument, "l1_loss: length mismatch");
  if (est.empty()) raise(ErrorCode::kInvalidArgument, "l1_loss: empty input");
  double acc = 0.0;
  for (size_t i = 0; i < est.size(); ++i)
    acc += std::abs(est.samples[i] - ref.samples[i]);
  return acc / static_cast<double>(est.size());
}

AdamState AdamState::init(const ModelParams& params) {
  AdamState s;
  for (const auto& e : params.entries) {
    if (!e.trainable) continue;
    s.m.push_back(Tensor::zeros(e.tensor.shape));
    s.v.push_back(Tensor::zeros(e.tensor.shape));
  }
  return s;
}

void adam_step(ModelParams& params, const std::vector<Tensor>& grads,
               AdamState& state, double lr) {
  size_t gi = 0;
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (auto& e : params.entries) {
    if (!e.trainable) continue;
    if (gi >= grads.size() || !grads[gi].same_shape(e.tensor))
      raise(ErrorCode::kShapeMismatch, "adam_step: gradient shape mismatch at " + e.name);
    Tensor& m = state.m[gi];
    Tensor& v = state.v[gi];
    const Tensor& g = grads[gi];
    for (int64_t i = 0; i < e.tensor.numel(); ++i) {
      const double gd = g.data[i];
      m.data[i] = state.beta1 * m.data[i] + (1.0 - state.beta1) * gd;
      v.data[i] = state.beta2 * v.data[i] + (1.0 - state.beta2) * gd * gd;
      const double mh = m.data[i] / bc1;
      const double vh = v.data[i] / bc2;
      const double upd = lr * mh / (std::sqrt(vh) + state.eps);
      if (!std::isfinite(upd))
        raise(ErrorCode::kNonFinite, "adam_step: non-finite update in " + e.name);
      e.tensor.data[i] -= upd;
    }
    ++gi;
  }
  if (gi != grads.size())
    raise(ErrorCode::kShapeMismatch, "adam_step: gradient count mismatch");
}

TrainingPair sample_training_pair(const CorpusManifest& corpus, ClipCache& cache,
                                  double segment_seconds, int sample_rate,
                                  Rng& rng) {
  if (corpus.items.size() < 2)
    raise(ErrorCode::kInvalidArgument, "sample_training_pair: corpus too small");
  const auto seg = static_cast<size_t>(std::lround(segment_seconds * sample_rate));

  auto disjoint = [](const CorpusItem& a, const CorpusItem& b) {
    for (const auto& l : a.labels)
      if (std::find(b.labels.begin(), b.labels.end(), l) != b.labels.end())
        return false;
    return true;
  };
  auto segment_of = [&](const CorpusItem& item) -> std::optional<AudioClip> {
    const AudioClip& clip = cache.get(item, sample_rate);
    if (clip.size() < seg) return std::nullopt;
    const size_t off = rng.index(clip.size() - seg + 1);
    AudioClip s;
    s.sample_rate = sample_rate;
    s.samples.assign(clip.samples.begin() + static_cast<int64_t>(off),
                     clip.samples.begin() + static_cast<int64_t>(off + seg));
    for (double v : s.samples)
      if (v != 0.0) return s;
    return std::nullopt;  // silent segment: let the caller redraw
  };

  for (int attempt = 0; attempt < 100; ++attempt) {
    const CorpusItem& target = corpus.items[rng.index(corpus.items.size())];
    std::vector<const CorpusItem*> pool;
    for (const auto& it : corpus.items)
      if (it.id != target.id && disjoint(target, it)) pool.push_back(&it);
    if (pool.empty()) continue;
    const CorpusItem& inter = *pool[rng.index(pool.size())];

    auto t_seg = segment_of(target);
    auto i_seg = segment_of(inter);
    if (!t_seg || !i_seg) continue;

    TrainingPair pair;
    pair.target = std::move(*t_seg);
    pair.interferer = std::move(*i_seg);
    pair.query = !target.captions.empty()
                     ? target.captions[rng.index(target.captions.size())]
                     : target.labels[rng.index(target.labels.size())];
    return pair;
  }
  raise(ErrorCode::kExhaustedPool,
        "sample_training_pair: no class-disjoint non-silent pair found "
        "(single-class corpus?)");
}

namespace {

struct FlatIndex {
  size_t entry;    // index into ModelParams::entries
  int64_t offset;  // element offset within the tensor
};

std::vector<Tensor> collect_grads(const SeparatorModel& model, ForwardGraph& g) {
  std::vector<Tensor> grads;
  for (const auto& e : model.params.entries) {
    if (!e.trainable) continue;
    grads.push_back(g.tape->grad(g.param_ids.at(e.name)));
  }
  return grads;
}

}  // namespace

GradCheckResult grad_check(const SeparatorModel& model, const AudioClip& mixture,
                           const AudioClip& ref, const std::string& query,
                           double eps, int n_sample, uint64_t seed,
                           int corrupt_index) {
  const int row = model.vocab_row(query);
  if (row < 0) raise(ErrorCode::kUnknownQuery, "grad_check: query not in vocabulary");
  if (mixture.size() != ref.size())
    raise(ErrorCode::kInvalidArgument, "grad_check: mixture/ref length mismatch");

  Tensor refs({1, static_cast<int64_t>(ref.size())},
              std::vector<double>(ref.samples));

  // base forward for the tie mask
  ForwardOptions base_opts;
  base_opts.training = true;
  base_opts.vocab_rows = {row};
  GradCheckResult result;
  Tensor include({1, static_cast<int64_t>(ref.size())});
  {
    ForwardGraph g = build_forward(model, {mixture}, base_opts);
    const Tensor& wave = g.tape->val(g.wave);
    int64_t active = 0;
    for (int64_t i = 0; i < wave.numel(); ++i) {
      const bool tie = std::abs(wave.data[i] - refs.data[i]) < 1e-6;
      include.data[i] = tie ? 0.0 : 1.0;
      if (tie)
        ++result.tied_samples;
      else
        ++active;
    }
    if (active == 0) {
      result.all_tied = true;
      return result;
    }
  }

  // analytic gradients of the masked loss
  SeparatorModel work = model;  // perturbed copy
  ForwardOptions opts = base_opts;
  opts.refs = &refs;
  opts.l1_include = &include;
  std::vector<Tensor> analytic;
  {
    ForwardGraph g = build_forward(work, {mixture}, opts);
    g.tape->backward(g.loss);
    analytic = collect_grads(work, g);
  }

  // sample trainable coordinates
  std::vector<FlatIndex> coords;
  {
    std::vector<std::pair<size_t, int64_t>> spans;  // (entry idx, numel)
    int64_t total = 0;
    for (size_t ei = 0; ei < work.params.entries.size(); ++ei) {
      const auto& e = work.params.entries[ei];
      if (!e.trainable) continue;
      spans.emplace_back(ei, e.tensor.numel());
      total += e.tensor.numel();
    }
    Rng rng(derive_seed(seed, 0xC8ECULL));
    std::vector<int64_t> flat;
    if (total <= n_sample) {
      for (int64_t i = 0; i < total; ++i) flat.push_back(i);
    } else {
      std::vector<int64_t> all(static_cast<size_t>(total));
      for (int64_t i = 0; i < total; ++i) all[static_cast<size_t>(i)] = i;
      rng.shuffle(all);
      flat.assign(all.begin(), all.begin() + n_sample);
    }
    for (int64_t f : flat) {
      int64_t rem = f;
      for (const auto& [ei, n] : spans) {
        if (rem < n) {
          coords.push_back(FlatIndex{ei, rem});
          break;
        }
        rem -= n;
      }
    }
  }

  auto loss_at = [&]() {
    ForwardGraph g = build_forward(work, {mixture}, opts);
    return g.tape->val(g.loss).data[0];
  };

  // map entry index -> position in the trainable-only gradient list
  std::vector<int> trainable_pos(work.params.entries.size(), -1);
  {
    int pos = 0;
    for (size_t ei = 0; ei < work.params.entries.size(); ++ei)
      if (work.params.entries[ei].trainable) trainable_pos[ei] = pos++;
  }

  for (size_t ci = 0; ci < coords.size(); ++ci) {
    const auto& [ei, off] = coords[ci];
    Tensor& t = work.params.entries[ei].tensor;
    const double saved = t.data[off];
    t.data[off] = saved + eps;
    const double lp = loss_at();
    t.data[off] = saved - eps;
    const double lm = loss_at();
    t.data[off] = saved;

    const double g_fd = (lp - lm) / (2.0 * eps);
    double g_an = analytic[static_cast<size_t>(trainable_pos[ei])].data[off];
    if (corrupt_index >= 0 && static_cast<size_t>(corrupt_index) == ci)
      g_an *= 1.1;
    const double rel = std::abs(g_an - g_fd) / std::max(std::abs(g_fd), 1e-8);
    if (rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_param = work.params.entries[ei].name + "[" +
                           std::to_string(off) + "]";
    }
    ++result.checked;
  }
  return result;
}

namespace {

struct EvalSet {
  std::vector<AudioClip> mixtures;
  std::vector<AudioClip> refs;
  std::vector<int> query_rows;
};

EvalSet build_eval_set(const CorpusManifest& corpus, ClipCache& cache,
                       const SeparatorModel& model, const TrainConfig& tcfg,
                       int sample_rate) {
  EvalSet es;
  Rng rng(derive_seed(tcfg.seed, 0xE7A1ULL));
  for (int i = 0; i < tcfg.eval_mixtures; ++i) {
    TrainingPair pair = sample_training_pair(corpus, cache, tcfg.segment_seconds,
                                             sample_rate, rng);
    MixResult mix = mix_at_snr(pair.target, pair.interferer, 0.0);
    const int row = model.vocab_row(pair.query);
    if (row < 0)
      raise(ErrorCode::kUnknownQuery,
            "train eval: query missing from vocabulary: " + pair.query);
    es.mixtures.push_back(std::move(mix.mixture));
    es.refs.push_back(std::move(mix.target));
    es.query_rows.push_back(row);
  }
  return es;
}

double eval_sdri(const SeparatorModel& model, const EvalSet& es) {
  std::vector<double> values;
  const size_t chunk = 4;
  for (size_t base = 0; base < es.mixtures.size(); base += chunk) {
    const size_t hi = std::min(base + chunk, es.mixtures.size());
    std::vector<AudioClip> batch(es.mixtures.begin() + static_cast<int64_t>(base),
                                 es.mixtures.begin() + static_cast<int64_t>(hi));
    ForwardOptions opts;
    opts.training = false;
    opts.vocab_rows.assign(es.query_rows.begin() + static_cast<int64_t>(base),
                           es.query_rows.begin() + static_cast<int64_t>(hi));
    ForwardGraph g = build_forward(model, batch, opts);
    const Tensor& wave = g.tape->val(g.wave);
    const int64_t len = wave.dim(1);
    for (size_t i = base; i < hi; ++i) {
      AudioClip est;
      est.sample_rate = es.mixtures[i].sample_rate;
      const double* p = wave.ptr() + static_cast<int64_t>(i - base) * len;
      est.samples.assign(p, p + len);
      values.push_back(sdri(est, es.mixtures[i], es.refs[i]));
    }
  }
  return pairwise_mean(values);
}

std::vector<std::pair<std::string, Tensor>> adam_to_tensors(
    const SeparatorModel& model, const AdamState& st) {
  std::vector<std::pair<std::string, Tensor>> out;
  size_t gi = 0;
  for (const auto& e : model.params.entries) {
    if (!e.trainable) continue;
    out.emplace_back("adam.m." + e.name, st.m[gi]);
    out.emplace_back("adam.v." + e.name, st.v[gi]);
    ++gi;
  }
  return out;
}

void adam_from_tensors(const SeparatorModel& model, AdamState& st,
                       const std::vector<std::pair<std::string, Tensor>>& ts) {
  size_t gi = 0;
  for (const auto& e : model.params.entries) {
    if (!e.trainable) continue;
    for (const auto& [name, t] : ts) {
      if (name == "adam.m." + e.name) st.m[gi] = t;
      if (name == "adam.v." + e.name) st.v[gi] = t;
    }
    ++gi;
  }
}

}  // namespace

TrainResult train(const CorpusManifest& corpus, const CorpusManifest* eval_corpus,
                  const SeparatorConfig& cfg, const TrainConfig& tcfg,
                  const std::string& out_dir,
                  const std::string& resume_checkpoint) {
  cfg.model.validate();
  cfg.stft.validate();
  tcfg.validate(cfg.stft, cfg.sample_rate);
  fs::create_directories(out_dir);

  SeparatorModel model;
  AdamState adam;
  int64_t start_step = 0;
  if (!resume_checkpoint.empty()) {
    LoadedCheckpoint lc = load_checkpoint(resume_checkpoint);
    model = std::move(lc.model);
    adam = AdamState::init(model.params);
    if (lc.has_optimizer) adam_from_tensors(model, adam, lc.extra.opt_tensors);
    adam.step = lc.extra.adam_step;
    start_step = lc.extra.train_step;
  } else {
    std::vector<std::string> keys;
    for (const auto& it : corpus.items) {
      for (const auto& l : it.labels) keys.push_back(l);
      for (const auto& c : it.captions) keys.push_back(c);
    }
    Vocabulary vocab =
        build_vocab(keys, cfg.model.d_query, derive_seed(tcfg.seed, 1));
    model = init_model(cfg, vocab, derive_seed(tcfg.seed, 2));
    adam = AdamState::init(model.params);
  }

  ClipCache cache;
  const EvalSet eval_set = build_eval_set(
      eval_corpus != nullptr ? *eval_corpus : corpus,
      cache, model, tcfg, cfg.sample_rate);

  TrainResult result;
  result.checkpoint_path = (fs::path(out_dir) / "checkpoint.lkp").string();
  result.log_path = (fs::path(out_dir) / "train_log.csv").string();

  std::ofstream log(result.log_path,
                    start_step > 0 ? std::ios::app : std::ios::trunc);
  if (!log) raise(ErrorCode::kIoError, "cannot write log: " + result.log_path);
  if (start_step == 0) log << "step,loss,eval_sdri,wall_ms\n";

  auto save = [&](int64_t step) {
    CheckpointExtra extra;
    extra.opt_tensors = adam_to_tensors(model, adam);
    extra.adam_step = adam.step;
    extra.train_step = step;
    extra.rng_seed = tcfg.seed;
    save_checkpoint(result.checkpoint_path, model, BlobDtype::kF64, &extra);
  };

  if (tcfg.max_steps == 0 || start_step >= tcfg.max_steps) {
    save(start_step);
    result.steps_done = start_step;
    return result;
  }

  using Clock = std::chrono::steady_clock;
  for (int64_t step = start_step + 1; step <= tcfg.max_steps; ++step) {
    const auto t0 = Clock::now();
    Rng rng(derive_seed(tcfg.seed, 0x5000000ULL + static_cast<uint64_t>(step)));

    std::vector<AudioClip> mixtures;
    Tensor refs({tcfg.batch_size,
                 static_cast<int64_t>(std::lround(tcfg.segment_seconds *
                                                  cfg.sample_rate))});
    std::vector<int> rows;
    for (int b = 0; b < tcfg.batch_size; ++b) {
      TrainingPair pair = sample_training_pair(corpus, cache, tcfg.segment_seconds,
                                               cfg.sample_rate, rng);
      const double snr = rng.uniform(tcfg.snr_lo_db, tcfg.snr_hi_db);
      MixResult mix = mix_at_snr(pair.target, pair.interferer, snr);
      const int row = model.vocab_row(pair.query);
      if (row < 0)
        raise(ErrorCode::kUnknownQuery, "train: query not in vocabulary: " + pair.query);
      rows.push_back(row);
      std::copy(mix.target.samples.begin(), mix.target.samples.end(),
                refs.ptr() + static_cast<int64_t>(b) * refs.dim(1));
      mixtures.push_back(std::move(mix.mixture));
    }

    ForwardOptions opts;
    opts.training = true;
    opts.vocab_rows = rows;
    opts.refs = &refs;
    ForwardGraph g = build_forward(model, mixtures, opts);
    const double loss = g.tape->val(g.loss).data[0];
    if (!std::isfinite(loss)) {
      // abort, keeping the last good checkpoint on disk
      result.aborted_nan = true;
      result.steps_done = step - 1;
      log << step << ",nan,,\n";
      return result;
    }
    g.tape->backward(g.loss);
    const std::vector<Tensor> grads = collect_grads(model, g);
    adam_step(model.params, grads, adam, tcfg.learning_rate);
    commit_bn_stats(model.params, g.bn_stats);

    const bool do_eval = step % tcfg.eval_every == 0 || step == tcfg.max_steps;
    std::string eval_str;
    if (do_eval) {
      result.last_eval_sdri = eval_sdri(model, eval_set);
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6f", result.last_eval_sdri);
      eval_str = buf;
      save(step);
    }
    const auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             Clock::now() - t0)
                             .count();
    char loss_str[32];
    std::snprintf(loss_str, sizeof(loss_str), "%.9f", loss);
    log << step << ',' << loss_str << ',' << eval_str << ',' << wall_ms << "\n";
    result.steps_done = step;
  }
  save(tcfg.max_steps);
  return result;
}

}  // namespace lasskit
