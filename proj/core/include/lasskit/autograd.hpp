// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "lasskit/stft.hpp"
#include "lasskit/tensor.hpp"

namespace lasskit {

struct VarId {
  int32_t idx = -1;
  bool valid() const { return idx >= 0; }
};

// Per-channel batch statistics proposed by a batch-norm node; the training
// loop folds them into the running estimates after the step commits.
struct BnBatchStats {
  std::string prefix;  // parameter prefix, e.g. "enc0.unit0.bn1"
  Tensor mean;         // (C)
  Tensor var;          // (C), biased
};

// Reverse-mode tape over the separator's operation set. Values live on the
// tape for the duration of a forward/backward pair; ops record closures in
// push order and backward() runs them in reverse.
class Tape {
 public:
  VarId leaf(Tensor value);      // gradient tracked
  VarId constant(Tensor value);  // gradient not tracked

  const Tensor& val(VarId id) const { return nodes_[id.idx].value; }
  // Zero tensor when the node never received a gradient.
  const Tensor& grad(VarId id);
  bool requires_grad(VarId id) const { return nodes_[id.idx].requires_grad; }
  size_t size() const { return nodes_.size(); }

  void backward(VarId scalar_loss);

  // ---- element-wise / small ops ----
  VarId add(VarId a, VarId b);
  VarId add_scalar(VarId x, double c);
  VarId relu(VarId x);
  VarId leaky_relu(VarId x, double slope);
  VarId sigmoid_scale(VarId x, double ceiling);
  VarId atan2v(VarId y, VarId x);

  // ---- dense / table ops ----
  // x (N,I), w (O,I), b (O) -> (N,O)
  VarId linear(VarId x, VarId w, VarId b);
  // x (N,C) -> (N,len)
  VarId slice_cols(VarId x, int64_t start, int64_t len);
  // table (V,D), one row index per batch item -> (N,D), rows L2-normalized
  VarId embed_rows_normalized(VarId table, const std::vector<int>& rows);

  // ---- spatial ops over (N,C,H,W) ----
  VarId conv2d(VarId x, VarId w, VarId b, int pad);
  VarId tconv2d_2x2(VarId x, VarId w, VarId b);  // stride-2 upsample, w (C,O,2,2)
  VarId batchnorm(VarId x, VarId gamma, VarId beta, const Tensor& running_mean,
                  const Tensor& running_var, bool use_batch_stats,
                  const std::string& stats_prefix,
                  std::vector<BnBatchStats>* stats_out);
  // gamma, beta (N,C) broadcast over (H,W)
  VarId film(VarId x, VarId gamma, VarId beta);
  VarId avgpool2x2(VarId x);
  VarId concat_channels(VarId a, VarId b);
  VarId pad_hw(VarId x, int64_t h_to, int64_t w_to);  // zero pad bottom/right

  // (N,C,Hf,Wt): picks `channel`, crops Wt to t_frames and Hf to f_bins,
  // transposes to (t, f) order and replicates the top retained row onto the
  // Nyquist bin -> (N, t_frames, f_bins+1)
  VarId head_layout(VarId x, int channel, int64_t t_frames, int64_t f_bins);

  // ---- spectral resynthesis ----
  // m, psi (N,T,F) against fixed mixture spectra -> (S_re, S_im) (N,T,F)
  std::pair<VarId, VarId> polar_mask(
      VarId m, VarId psi, std::vector<const ComplexSpectrogram*> specs);
  // (N,T,F) pair -> waveform (N, source_len); exact linear-map adjoint
  VarId istft_wave(VarId s_re, VarId s_im, const StftConfig& cfg,
                   int64_t source_len);

  // mean |est-ref| over included elements; `include` is empty (all) or a
  // 0/1 tensor shaped like est, fixed for the life of the graph
  VarId masked_l1(VarId est, const Tensor& ref, const Tensor& include);

  // scalar sum(x .* w) against fixed weights
  VarId dot_const(VarId x, const Tensor& w);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool grad_ready = false;
  };

  VarId push(Tensor value, bool requires_grad);
  Tensor& grad_buf(VarId id);
  void accumulate(VarId id, const double* g, int64_t n);

  std::vector<Node> nodes_;
  std::vector<std::function<void()>> steps_;
  Tensor empty_grad_;
};

}  // namespace lasskit
