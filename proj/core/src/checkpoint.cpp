// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lasskit/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "lasskit/common.hpp"

namespace lasskit {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'L', 'K', 'P', '1'};

const char* dtype_name(BlobDtype d) { return d == BlobDtype::kF32 ? "f32" : "f64"; }

size_t dtype_size(BlobDtype d) { return d == BlobDtype::kF32 ? 4 : 8; }

void append_tensor(std::string& blob, const Tensor& t, BlobDtype d) {
  if (d == BlobDtype::kF32) {
    for (double v : t.data) {
      auto f = static_cast<float>(v);
      blob.append(reinterpret_cast<const char*>(&f), 4);
    }
  } else {
    blob.append(reinterpret_cast<const char*>(t.data.data()),
                t.data.size() * sizeof(double));
  }
}

json config_to_json(const SeparatorConfig& cfg) {
  json m;
  m["n_encoder_blocks"] = cfg.model.n_encoder_blocks;
  m["n_bottleneck_blocks"] = cfg.model.n_bottleneck_blocks;
  m["channels"] = cfg.model.channels;
  m["kernel"] = cfg.model.kernel;
  m["leaky_slope"] = cfg.model.leaky_slope;
  m["d_query"] = cfg.model.d_query;
  m["mask_ceiling"] = cfg.model.mask_ceiling;
  m["downsample"] = "avgpool2x2";
  m["residual_units"] = cfg.model.residual_units;
  m["film_hidden"] = cfg.model.film_hidden;
  json s;
  s["window_size"] = cfg.stft.window_size;
  s["hop_size"] = cfg.stft.hop_size;
  s["window"] = "hann";
  s["center_pad"] = cfg.stft.center_pad;
  json out;
  out["model"] = m;
  out["stft"] = s;
  out["sample_rate"] = cfg.sample_rate;
  return out;
}

SeparatorConfig config_from_json(const json& j) {
  SeparatorConfig cfg;
  const json& m = j.at("model");
  cfg.model.n_encoder_blocks = m.at("n_encoder_blocks").get<int>();
  cfg.model.n_bottleneck_blocks = m.at("n_bottleneck_blocks").get<int>();
  cfg.model.channels = m.at("channels").get<std::vector<int>>();
  cfg.model.kernel = m.at("kernel").get<int>();
  cfg.model.leaky_slope = m.at("leaky_slope").get<double>();
  cfg.model.d_query = m.at("d_query").get<int>();
  cfg.model.mask_ceiling = m.at("mask_ceiling").get<double>();
  cfg.model.residual_units = m.at("residual_units").get<int>();
  cfg.model.film_hidden = m.at("film_hidden").get<int>();
  const json& s = j.at("stft");
  cfg.stft.window_size = s.at("window_size").get<int>();
  cfg.stft.hop_size = s.at("hop_size").get<int>();
  cfg.stft.center_pad = s.at("center_pad").get<bool>();
  cfg.sample_rate = j.at("sample_rate").get<int>();
  return cfg;
}

}  // namespace

void save_checkpoint(const std::string& path, const SeparatorModel& model,
                     BlobDtype dtype, const CheckpointExtra* extra) {
  json header = config_to_json(model.config);
  header["format_version"] = 1;
  header["kind"] = "lasskit-separator";
  header["library_version"] = kVersion;
  header["vocab"] = model.vocab;
  header["dtype"] = dtype_name(dtype);
  header["rng_seed"] = extra != nullptr ? extra->rng_seed : 0;
  header["train_step"] = extra != nullptr ? extra->train_step : 0;
  header["adam_step"] = extra != nullptr ? extra->adam_step : 0;
  header["has_optimizer"] = extra != nullptr && !extra->opt_tensors.empty();

  std::string blob;
  json tensors = json::array();
  uint64_t offset = 0;
  auto record = [&](const std::string& name, const Tensor& t) {
    json e;
    e["name"] = name;
    e["shape"] = t.shape;
    e["dtype"] = dtype_name(dtype);
    e["offset"] = offset;
    tensors.push_back(e);
    append_tensor(blob, t, dtype);
    offset += static_cast<uint64_t>(t.numel()) * dtype_size(dtype);
  };
  for (const auto& e : model.params.entries) record(e.name, e.tensor);
  if (extra != nullptr)
    for (const auto& [name, t] : extra->opt_tensors) record(name, t);
  header["tensors"] = tensors;

  const std::string head = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::kIoError, "cannot write checkpoint: " + path);
  out.write(kMagic, 4);
  const auto head_len = static_cast<uint64_t>(head.size());
  out.write(reinterpret_cast<const char*>(&head_len), 8);
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) raise(ErrorCode::kIoError, "short checkpoint write: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::kIoError, "cannot open checkpoint: " + path);
  char magic[4];
  uint64_t head_len = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&head_len), 8);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    raise(ErrorCode::kParseError, "not a lasskit checkpoint: " + path);
  std::string head(head_len, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head_len));
  if (!in) raise(ErrorCode::kParseError, "truncated checkpoint header: " + path);
  std::string blob((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());

  json header;
  try {
    header = json::parse(head);
  } catch (const json::exception& e) {
    raise(ErrorCode::kParseError,
          std::string("bad checkpoint header JSON: ") + e.what());
  }
  if (header.value("format_version", 0) != 1)
    raise(ErrorCode::kParseError, "unsupported checkpoint format version");

  LoadedCheckpoint lc;
  const SeparatorConfig cfg = config_from_json(header);
  const auto vocab_keys = header.at("vocab").get<std::vector<std::string>>();
  const std::string dname = header.at("dtype").get<std::string>();
  if (dname != "f32" && dname != "f64")
    raise(ErrorCode::kParseError, "unknown checkpoint dtype: " + dname);
  lc.dtype = dname == "f32" ? BlobDtype::kF32 : BlobDtype::kF64;
  lc.extra.rng_seed = header.value("rng_seed", uint64_t{0});
  lc.extra.train_step = header.value("train_step", int64_t{0});
  lc.extra.adam_step = header.value("adam_step", int64_t{0});
  lc.has_optimizer = header.value("has_optimizer", false);

  Vocabulary vocab;
  vocab.dim = cfg.model.d_query;
  vocab.entries = vocab_keys;
  vocab.table.assign(vocab_keys.size() * static_cast<size_t>(cfg.model.d_query), 0.0);
  lc.model = init_model(cfg, vocab, /*seed=*/0);

  const size_t elem = dtype_size(lc.dtype);
  auto read_tensor = [&](const json& e) {
    Tensor t(e.at("shape").get<std::vector<int64_t>>());
    const auto off = e.at("offset").get<uint64_t>();
    const auto bytes = static_cast<uint64_t>(t.numel()) * elem;
    if (off + bytes > blob.size())
      raise(ErrorCode::kParseError, "checkpoint blob truncated at tensor " +
                                        e.at("name").get<std::string>());
    if (lc.dtype == BlobDtype::kF32) {
      const char* p = blob.data() + off;
      for (int64_t i = 0; i < t.numel(); ++i) {
        float f;
        std::memcpy(&f, p + i * 4, 4);
        t.data[static_cast<size_t>(i)] = static_cast<double>(f);
      }
    } else {
      std::memcpy(t.data.data(), blob.data() + off, bytes);
    }
    return t;
  };

  size_t model_tensors = 0;
  for (const auto& e : header.at("tensors")) {
    const auto name = e.at("name").get<std::string>();
    Tensor t = read_tensor(e);
    if (lc.model.params.contains(name)) {
      Tensor& dst = lc.model.params.at(name);
      if (dst.shape != t.shape)
        raise(ErrorCode::kParseError, "checkpoint tensor shape mismatch: " + name);
      dst = std::move(t);
      ++model_tensors;
    } else if (name.rfind("adam.", 0) == 0) {
      lc.extra.opt_tensors.emplace_back(name, std::move(t));
    } else {
      raise(ErrorCode::kParseError, "checkpoint has unknown tensor: " + name);
    }
  }
  if (model_tensors != lc.model.params.entries.size())
    raise(ErrorCode::kParseError, "checkpoint is missing model tensors");
  return lc;
}

}  // namespace lasskit
