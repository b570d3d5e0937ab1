// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lasskit/model.hpp"

#include <algorithm>
#include <cmath>

#include "lasskit/rng.hpp"

namespace lasskit {

void ModelConfig::validate() const {
  if (n_encoder_blocks < 1 || n_bottleneck_blocks < 0)
    raise(ErrorCode::kInvalidArgument, "ModelConfig: bad block counts");
  if (static_cast<int>(channels.size()) != n_encoder_blocks)
    raise(ErrorCode::kInvalidArgument,
          "ModelConfig: channels must list one width per encoder block");
  for (size_t i = 0; i + 1 < channels.size(); ++i)
    if (channels[i] >= channels[i + 1])
      raise(ErrorCode::kInvalidArgument,
            "ModelConfig: channels must be strictly increasing");
  for (int c : channels)
    if (c < 1) raise(ErrorCode::kInvalidArgument, "ModelConfig: channel width < 1");
  if (kernel < 1 || kernel % 2 == 0)
    raise(ErrorCode::kInvalidArgument, "ModelConfig: kernel must be odd");
  if (d_query < 1) raise(ErrorCode::kInvalidArgument, "ModelConfig: d_query < 1");
  if (!(mask_ceiling > 0.0))
    raise(ErrorCode::kInvalidArgument, "ModelConfig: mask_ceiling must be positive");
  if (residual_units < 1)
    raise(ErrorCode::kInvalidArgument, "ModelConfig: residual_units < 1");
}

Tensor& ModelParams::at(const std::string& name) {
  auto it = index.find(name);
  if (it == index.end())
    raise(ErrorCode::kInvalidArgument, "ModelParams: no tensor named " + name);
  return entries[it->second].tensor;
}

const Tensor& ModelParams::at(const std::string& name) const {
  auto it = index.find(name);
  if (it == index.end())
    raise(ErrorCode::kInvalidArgument, "ModelParams: no tensor named " + name);
  return entries[it->second].tensor;
}

void ModelParams::add(const std::string& name, Tensor t, bool trainable) {
  if (index.count(name))
    raise(ErrorCode::kInvalidArgument, "ModelParams: duplicate tensor " + name);
  index.emplace(name, entries.size());
  entries.push_back(Entry{name, std::move(t), trainable});
}

int64_t ModelParams::total_elements() const {
  int64_t n = 0;
  for (const auto& e : entries) n += e.tensor.numel();
  return n;
}

int64_t ModelParams::trainable_elements() const {
  int64_t n = 0;
  for (const auto& e : entries)
    if (e.trainable) n += e.tensor.numel();
  return n;
}

ModelPlan make_plan(const ModelConfig& cfg) {
  cfg.validate();
  ModelPlan plan;
  const int n = cfg.n_encoder_blocks;
  const auto& ch = cfg.channels;

  auto add_block = [&](std::vector<ModelPlan::Block>& dst, const std::string& prefix,
                       int in_ch, int out_ch, int first_in_ch) {
    ModelPlan::Block b;
    b.prefix = prefix;
    for (int u = 0; u < cfg.residual_units; ++u) {
      ModelPlan::Unit unit;
      unit.prefix = prefix + ".unit" + std::to_string(u);
      unit.in_ch = u == 0 ? first_in_ch : out_ch;
      unit.out_ch = out_ch;
      b.units.push_back(unit);
      plan.film_channels.push_back(out_ch);  // conv1
      plan.film_channels.push_back(out_ch);  // conv2
    }
    (void)in_ch;
    dst.push_back(std::move(b));
  };

  for (int i = 0; i < n; ++i)
    add_block(plan.encoder, "enc" + std::to_string(i), 0, ch[static_cast<size_t>(i)],
              i == 0 ? 1 : ch[static_cast<size_t>(i - 1)]);
  for (int j = 0; j < cfg.n_bottleneck_blocks; ++j)
    add_block(plan.bottleneck, "bott" + std::to_string(j), 0, ch.back(), ch.back());
  for (int d = 0; d < n; ++d) {
    const int up_in = d == 0 ? ch.back() : ch[static_cast<size_t>(n - d)];
    const int skip_ch = ch[static_cast<size_t>(n - 1 - d)];
    plan.ups.push_back(
        ModelPlan::Up{"dec" + std::to_string(d) + ".up", up_in, skip_ch});
    add_block(plan.decoder, "dec" + std::to_string(d), 0, skip_ch, 2 * skip_ch);
  }
  plan.head_in = ch.front();
  plan.film_total = 0;
  for (int m : plan.film_channels) plan.film_total += 2 * m;
  return plan;
}

namespace {

Tensor uniform_tensor(std::vector<int64_t> shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.uniform(-bound, bound);
  return t;
}

void add_unit_params(ModelParams& p, const ModelPlan::Unit& u, int k, Rng& rng) {
  const int64_t in = u.in_ch, out = u.out_ch;
  p.add(u.prefix + ".bn1.gamma", Tensor::full({in}, 1.0), true);
  p.add(u.prefix + ".bn1.beta", Tensor::zeros({in}), true);
  p.add(u.prefix + ".bn1.running_mean", Tensor::zeros({in}), false);
  p.add(u.prefix + ".bn1.running_var", Tensor::full({in}, 1.0), false);
  p.add(u.prefix + ".conv1.weight",
        uniform_tensor({out, in, k, k}, 1.0 / std::sqrt(double(in) * k * k), rng),
        true);
  p.add(u.prefix + ".conv1.bias", Tensor::zeros({out}), true);
  p.add(u.prefix + ".bn2.gamma", Tensor::full({out}, 1.0), true);
  p.add(u.prefix + ".bn2.beta", Tensor::zeros({out}), true);
  p.add(u.prefix + ".bn2.running_mean", Tensor::zeros({out}), false);
  p.add(u.prefix + ".bn2.running_var", Tensor::full({out}, 1.0), false);
  p.add(u.prefix + ".conv2.weight",
        uniform_tensor({out, out, k, k}, 1.0 / std::sqrt(double(out) * k * k), rng),
        true);
  p.add(u.prefix + ".conv2.bias", Tensor::zeros({out}), true);
  if (in != out) {
    p.add(u.prefix + ".shortcut.weight",
          uniform_tensor({out, in, 1, 1}, 1.0 / std::sqrt(double(in)), rng), true);
    p.add(u.prefix + ".shortcut.bias", Tensor::zeros({out}), true);
  }
}

}  // namespace

SeparatorModel init_model(const SeparatorConfig& cfg, const Vocabulary& vocab,
                          uint64_t seed) {
  cfg.model.validate();
  cfg.stft.validate();
  if (vocab.dim != cfg.model.d_query)
    raise(ErrorCode::kInvalidArgument,
          "init_model: vocabulary dimension does not match d_query");

  SeparatorModel model;
  model.config = cfg;
  model.vocab = vocab.entries;

  const ModelPlan plan = make_plan(cfg.model);
  const int k = cfg.model.kernel;
  const int hidden = cfg.model.film_hidden_dim();
  Rng rng(seed);
  ModelParams& p = model.params;

  p.add("query.table",
        Tensor({static_cast<int64_t>(vocab.size()), vocab.dim},
               std::vector<double>(vocab.table)),
        true);
  p.add("film.fc1.weight",
        uniform_tensor({hidden, cfg.model.d_query},
                       1.0 / std::sqrt(double(cfg.model.d_query)), rng),
        true);
  p.add("film.fc1.bias", Tensor::zeros({hidden}), true);
  // zeroed final layer: gamma = 1, beta = 0 at init
  p.add("film.fc2.weight", Tensor::zeros({plan.film_total, hidden}), true);
  p.add("film.fc2.bias", Tensor::zeros({plan.film_total}), true);

  for (const auto& b : plan.encoder)
    for (const auto& u : b.units) add_unit_params(p, u, k, rng);
  for (const auto& b : plan.bottleneck)
    for (const auto& u : b.units) add_unit_params(p, u, k, rng);
  for (size_t d = 0; d < plan.decoder.size(); ++d) {
    const auto& up = plan.ups[d];
    p.add(up.prefix + ".weight",
          uniform_tensor({up.in_ch, up.out_ch, 2, 2},
                         1.0 / std::sqrt(double(up.in_ch) * 4.0), rng),
          true);
    p.add(up.prefix + ".bias", Tensor::zeros({up.out_ch}), true);
    for (const auto& u : plan.decoder[d].units) add_unit_params(p, u, k, rng);
  }
  // zeroed mask head with phase bias (1, 0): |M| = ceiling/2, rotation 0
  p.add("head.weight", Tensor::zeros({3, plan.head_in, k, k}), true);
  p.add("head.bias", Tensor({3}, {0.0, 1.0, 0.0}), true);
  return model;
}

int SeparatorModel::vocab_row(const std::string& query) const {
  const std::string key = canonicalize_query(query);
  auto it = std::lower_bound(vocab.begin(), vocab.end(), key);
  if (it == vocab.end() || *it != key) return -1;
  return static_cast<int>(it - vocab.begin());
}

QueryEmbedding SeparatorModel::embed(const std::string& query) const {
  const int row = vocab_row(query);
  if (row < 0)
    raise(ErrorCode::kUnknownQuery,
          "unknown query: \"" + canonicalize_query(query) + "\"");
  const Tensor& table = params.at("query.table");
  QueryEmbedding e;
  e.source = EmbeddingSource::kTable;
  e.vector.assign(table.ptr() + static_cast<int64_t>(row) * table.dim(1),
                  table.ptr() + static_cast<int64_t>(row + 1) * table.dim(1));
  l2_normalize(e.vector);
  return e;
}

Tensor apply_film(const Tensor& h, const FilmParams& p) {
  if (h.rank() != 3 || static_cast<int64_t>(p.gamma.size()) != h.dim(0) ||
      p.beta.size() != p.gamma.size())
    raise(ErrorCode::kShapeMismatch, "apply_film: channel mismatch");
  Tensor out = h;
  const int64_t hw = h.dim(1) * h.dim(2);
  for (int64_t c = 0; c < h.dim(0); ++c) {
    const double g = p.gamma[static_cast<size_t>(c)];
    const double b = p.beta[static_cast<size_t>(c)];
    double* dst = out.ptr() + c * hw;
    for (int64_t j = 0; j < hw; ++j) dst[j] = g * dst[j] + b;
  }
  return out;
}

std::vector<FilmParams> film_generator(const ModelParams& params,
                                       const ModelPlan& plan,
                                       const QueryEmbedding& e_q) {
  const Tensor& w1 = params.at("film.fc1.weight");
  const Tensor& b1 = params.at("film.fc1.bias");
  const Tensor& w2 = params.at("film.fc2.weight");
  const Tensor& b2 = params.at("film.fc2.bias");
  if (static_cast<int64_t>(e_q.vector.size()) != w1.dim(1))
    raise(ErrorCode::kShapeMismatch, "film_generator: query dimension mismatch");

  const int64_t hidden = w1.dim(0);
  std::vector<double> h(static_cast<size_t>(hidden));
  for (int64_t i = 0; i < hidden; ++i) {
    double acc = b1.data[i];
    for (int64_t j = 0; j < w1.dim(1); ++j)
      acc += w1.data[i * w1.dim(1) + j] * e_q.vector[static_cast<size_t>(j)];
    h[static_cast<size_t>(i)] = acc > 0.0 ? acc : 0.0;
  }
  std::vector<double> raw(static_cast<size_t>(w2.dim(0)));
  for (int64_t i = 0; i < w2.dim(0); ++i) {
    double acc = b2.data[i];
    for (int64_t j = 0; j < hidden; ++j)
      acc += w2.data[i * hidden + j] * h[static_cast<size_t>(j)];
    raw[static_cast<size_t>(i)] = acc;
  }

  std::vector<FilmParams> out;
  out.reserve(plan.film_channels.size());
  size_t off = 0;
  for (int m : plan.film_channels) {
    FilmParams fp;
    fp.gamma.resize(static_cast<size_t>(m));
    fp.beta.resize(static_cast<size_t>(m));
    for (int c = 0; c < m; ++c) fp.gamma[static_cast<size_t>(c)] = 1.0 + raw[off + c];
    off += static_cast<size_t>(m);
    for (int c = 0; c < m; ++c) fp.beta[static_cast<size_t>(c)] = raw[off + c];
    off += static_cast<size_t>(m);
    out.push_back(std::move(fp));
  }
  return out;
}

namespace {

// Sequential FiLM slice feed over the generator's raw output.
struct FilmFeed {
  Tape* tape;
  VarId raw;
  int64_t off = 0;

  std::pair<VarId, VarId> next(int m) {
    VarId graw = tape->slice_cols(raw, off, m);
    VarId gamma = tape->add_scalar(graw, 1.0);
    off += m;
    VarId beta = tape->slice_cols(raw, off, m);
    off += m;
    return {gamma, beta};
  }
};

struct UnitIds {
  VarId bn1_gamma, bn1_beta, conv1_w, conv1_b;
  VarId bn2_gamma, bn2_beta, conv2_w, conv2_b;
  VarId shortcut_w, shortcut_b;
};

VarId unit_forward(Tape& t, const ModelParams& params, const UnitIds& ids,
                   const ModelPlan::Unit& u, VarId x, double slope, int pad,
                   bool training, std::vector<BnBatchStats>* stats,
                   FilmFeed& feed) {
  VarId f = t.batchnorm(x, ids.bn1_gamma, ids.bn1_beta,
                        params.at(u.prefix + ".bn1.running_mean"),
                        params.at(u.prefix + ".bn1.running_var"), training,
                        u.prefix + ".bn1", stats);
  f = t.leaky_relu(f, slope);
  f = t.conv2d(f, ids.conv1_w, ids.conv1_b, pad);
  auto [g1, b1] = feed.next(u.out_ch);
  f = t.film(f, g1, b1);
  f = t.batchnorm(f, ids.bn2_gamma, ids.bn2_beta,
                  params.at(u.prefix + ".bn2.running_mean"),
                  params.at(u.prefix + ".bn2.running_var"), training,
                  u.prefix + ".bn2", stats);
  f = t.leaky_relu(f, slope);
  f = t.conv2d(f, ids.conv2_w, ids.conv2_b, pad);
  auto [g2, b2] = feed.next(u.out_ch);
  f = t.film(f, g2, b2);
  VarId sc = x;
  if (u.in_ch != u.out_ch) sc = t.conv2d(x, ids.shortcut_w, ids.shortcut_b, 0);
  return t.add(f, sc);
}

int64_t ceil_multiple(int64_t v, int64_t m) { return (v + m - 1) / m * m; }

}  // namespace

ForwardGraph build_forward(const SeparatorModel& model,
                           const std::vector<AudioClip>& mixtures,
                           const ForwardOptions& opts) {
  const SeparatorConfig& cfg = model.config;
  cfg.model.validate();
  cfg.stft.validate();
  if (mixtures.empty())
    raise(ErrorCode::kInvalidArgument, "build_forward: empty batch");
  const auto n = static_cast<int64_t>(mixtures.size());

  const bool external = opts.external_eq.numel() > 0;
  if (!external &&
      static_cast<int64_t>(opts.vocab_rows.size()) != n)
    raise(ErrorCode::kInvalidArgument, "build_forward: one query per mixture");
  if (external && (opts.external_eq.rank() != 2 || opts.external_eq.dim(0) != n ||
                   opts.external_eq.dim(1) != cfg.model.d_query))
    raise(ErrorCode::kShapeMismatch, "build_forward: bad external embedding shape");

  ForwardGraph g;
  g.tape = std::make_unique<Tape>();
  Tape& t = *g.tape;

  // mixture spectra (fixed inputs; the mask rotates their phase)
  g.mix_specs.reserve(static_cast<size_t>(n));
  for (const auto& mix : mixtures) {
    if (static_cast<int>(mix.size()) < cfg.stft.window_size)
      raise(ErrorCode::kInvalidArgument,
            "build_forward: input shorter than one STFT window");
    g.mix_specs.push_back(stft(mix, cfg.stft));
  }
  const int64_t frames = g.mix_specs.front().frames;
  const int64_t bins = g.mix_specs.front().bins;
  const int64_t source_len = g.mix_specs.front().source_len;
  for (const auto& s : g.mix_specs)
    if (s.frames != frames || s.source_len != source_len)
      raise(ErrorCode::kInvalidArgument,
            "build_forward: batch mixtures must share one length");

  // parameters become tape nodes (leaves when training)
  for (const auto& e : model.params.entries) {
    if (!e.trainable) continue;  // running stats are read directly
    g.param_ids[e.name] =
        opts.training ? t.leaf(e.tensor) : t.constant(e.tensor);
  }
  auto pid = [&](const std::string& name) { return g.param_ids.at(name); };

  // query embedding -> FiLM parameters
  VarId eq = external
                 ? t.constant(opts.external_eq)
                 : t.embed_rows_normalized(pid("query.table"), opts.vocab_rows);
  VarId h1 = t.relu(t.linear(eq, pid("film.fc1.weight"), pid("film.fc1.bias")));
  VarId raw = t.linear(h1, pid("film.fc2.weight"), pid("film.fc2.bias"));
  FilmFeed feed{&t, raw, 0};

  // log1p-compressed magnitude, Nyquist bin dropped: (N, 1, F-1, T)
  const int64_t f_in = bins - 1;
  Tensor feat({n, 1, f_in, frames});
  for (int64_t i = 0; i < n; ++i) {
    const auto& spec = g.mix_specs[static_cast<size_t>(i)];
    for (int64_t f = 0; f < f_in; ++f)
      for (int64_t tt = 0; tt < frames; ++tt)
        feat.data[(i * f_in + f) * frames + tt] =
            std::log1p(std::abs(spec.at(tt, f)));
  }
  const int64_t scale = int64_t{1} << cfg.model.n_encoder_blocks;
  const int64_t f_pad = ceil_multiple(f_in, scale);
  const int64_t t_pad = ceil_multiple(frames, scale);
  VarId x = t.pad_hw(t.constant(std::move(feat)), f_pad, t_pad);

  const ModelPlan plan = make_plan(cfg.model);
  const double slope = cfg.model.leaky_slope;
  const int pad = cfg.model.kernel / 2;
  auto unit_ids = [&](const ModelPlan::Unit& u) {
    UnitIds ids;
    ids.bn1_gamma = pid(u.prefix + ".bn1.gamma");
    ids.bn1_beta = pid(u.prefix + ".bn1.beta");
    ids.conv1_w = pid(u.prefix + ".conv1.weight");
    ids.conv1_b = pid(u.prefix + ".conv1.bias");
    ids.bn2_gamma = pid(u.prefix + ".bn2.gamma");
    ids.bn2_beta = pid(u.prefix + ".bn2.beta");
    ids.conv2_w = pid(u.prefix + ".conv2.weight");
    ids.conv2_b = pid(u.prefix + ".conv2.bias");
    if (u.in_ch != u.out_ch) {
      ids.shortcut_w = pid(u.prefix + ".shortcut.weight");
      ids.shortcut_b = pid(u.prefix + ".shortcut.bias");
    }
    return ids;
  };
  auto run_block = [&](const ModelPlan::Block& b, VarId in) {
    VarId cur = in;
    for (const auto& u : b.units)
      cur = unit_forward(t, model.params, unit_ids(u), u, cur, slope, pad,
                         opts.training, &g.bn_stats, feed);
    return cur;
  };

  std::vector<VarId> skips;
  for (const auto& b : plan.encoder) {
    x = run_block(b, x);
    skips.push_back(x);
    x = t.avgpool2x2(x);
  }
  for (const auto& b : plan.bottleneck) x = run_block(b, x);
  for (size_t d = 0; d < plan.decoder.size(); ++d) {
    x = t.tconv2d_2x2(x, pid(plan.ups[d].prefix + ".weight"),
                      pid(plan.ups[d].prefix + ".bias"));
    x = t.concat_channels(x, skips[plan.decoder.size() - 1 - d]);
    x = run_block(plan.decoder[d], x);
  }
  VarId head = t.conv2d(x, pid("head.weight"), pid("head.bias"), pad);

  VarId u_logit = t.head_layout(head, 0, frames, f_in);
  VarId t_re = t.head_layout(head, 1, frames, f_in);
  VarId t_im = t.head_layout(head, 2, frames, f_in);
  g.mask_mag = t.sigmoid_scale(u_logit, cfg.model.mask_ceiling);
  g.mask_phase = t.atan2v(t_im, t_re);

  std::vector<const ComplexSpectrogram*> spec_ptrs;
  spec_ptrs.reserve(static_cast<size_t>(n));
  for (const auto& s : g.mix_specs) spec_ptrs.push_back(&s);
  auto [s_re, s_im] = t.polar_mask(g.mask_mag, g.mask_phase, spec_ptrs);
  g.wave = t.istft_wave(s_re, s_im, cfg.stft, source_len);

  if (opts.refs != nullptr) {
    static const Tensor kNoMask;
    g.loss = t.masked_l1(g.wave, *opts.refs,
                         opts.l1_include != nullptr ? *opts.l1_include : kNoMask);
  }
  return g;
}

Tensor residual_conv_block(const Tensor& h, const ResidualUnitParams& p,
                           const FilmParams& film1, const FilmParams& film2,
                           bool training) {
  if (h.rank() != 3) raise(ErrorCode::kShapeMismatch, "residual_conv_block: want (C,H,W)");
  const int64_t in_ch = h.dim(0);
  const int64_t out_ch = p.conv1_w.dim(0);
  const int k = static_cast<int>(p.conv1_w.dim(2));

  Tape t;
  VarId x = t.constant(Tensor({1, in_ch, h.dim(1), h.dim(2)},
                              std::vector<double>(h.data)));
  auto vec2 = [&](const std::vector<double>& v) {
    return t.constant(Tensor({1, static_cast<int64_t>(v.size())},
                             std::vector<double>(v)));
  };
  VarId f = t.batchnorm(x, t.constant(p.bn1_gamma), t.constant(p.bn1_beta),
                        p.bn1_mean, p.bn1_var, training, "bn1", nullptr);
  f = t.leaky_relu(f, p.leaky_slope);
  f = t.conv2d(f, t.constant(p.conv1_w), t.constant(p.conv1_b), k / 2);
  f = t.film(f, vec2(film1.gamma), vec2(film1.beta));
  f = t.batchnorm(f, t.constant(p.bn2_gamma), t.constant(p.bn2_beta),
                  p.bn2_mean, p.bn2_var, training, "bn2", nullptr);
  f = t.leaky_relu(f, p.leaky_slope);
  f = t.conv2d(f, t.constant(p.conv2_w), t.constant(p.conv2_b), k / 2);
  f = t.film(f, vec2(film2.gamma), vec2(film2.beta));
  VarId sc = x;
  if (in_ch != out_ch)
    sc = t.conv2d(x, t.constant(p.shortcut_w), t.constant(p.shortcut_b), 0);
  VarId out = t.add(f, sc);

  const Tensor& val = t.val(out);
  return Tensor({out_ch, h.dim(1), h.dim(2)}, std::vector<double>(val.data));
}

ForwardResult forward(const SeparatorModel& model, const AudioClip& mixture,
                      const QueryEmbedding& e_q) {
  if (static_cast<int>(e_q.vector.size()) != model.config.model.d_query)
    raise(ErrorCode::kShapeMismatch, "forward: query embedding dimension mismatch");
  for (const auto& e : model.params.entries)
    for (double v : e.tensor.data)
      if (!std::isfinite(v))
        raise(ErrorCode::kNonFinite, "forward: non-finite parameter in " + e.name);

  ForwardOptions opts;
  opts.training = false;
  opts.external_eq =
      Tensor({1, static_cast<int64_t>(e_q.vector.size())},
             std::vector<double>(e_q.vector));
  ForwardGraph g = build_forward(model, {mixture}, opts);

  ForwardResult r;
  const Tensor& wave = g.tape->val(g.wave);
  r.separated.sample_rate = mixture.sample_rate;
  r.separated.samples.assign(wave.data.begin(), wave.data.end());

  const Tensor& mag = g.tape->val(g.mask_mag);
  const Tensor& phase = g.tape->val(g.mask_phase);
  r.mask.frames = mag.dim(1);
  r.mask.bins = mag.dim(2);
  r.mask.magnitude.assign(mag.data.begin(), mag.data.end());
  r.mask.phase_residual.assign(phase.data.begin(), phase.data.end());
  return r;
}

void commit_bn_stats(ModelParams& params, const std::vector<BnBatchStats>& stats,
                     double momentum) {
  for (const auto& s : stats) {
    Tensor& mean = params.at(s.prefix + ".running_mean");
    Tensor& var = params.at(s.prefix + ".running_var");
    for (int64_t i = 0; i < mean.numel(); ++i) {
      mean.data[i] = momentum * mean.data[i] + (1.0 - momentum) * s.mean.data[i];
      var.data[i] = momentum * var.data[i] + (1.0 - momentum) * s.var.data[i];
    }
  }
}

}  // namespace lasskit
