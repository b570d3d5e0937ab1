// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lasskit/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <Eigen/Core>

#include "lasskit/fft.hpp"

namespace lasskit {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRow = Eigen::Map<RowMat>;
using CMapRow = Eigen::Map<const RowMat>;

constexpr double kBnEps = 1e-5;

void check_4d(const Tensor& t, const char* op) {
  if (t.rank() != 4) raise(ErrorCode::kShapeMismatch, std::string(op) + ": expected a 4-d tensor, got " + t.shape_str());
}

// Scatters x (C,H,W) into (C*k*k, H2*W2) patches, row-major.
void im2col(const double* x, int64_t c_in, int64_t h, int64_t w, int64_t k,
            int64_t pad, int64_t h2, int64_t w2, double* col) {
  const int64_t hw2 = h2 * w2;
  for (int64_t c = 0; c < c_in; ++c) {
    const double* plane = x + c * h * w;
    for (int64_t di = 0; di < k; ++di) {
      for (int64_t dj = 0; dj < k; ++dj) {
        double* row = col + ((c * k + di) * k + dj) * hw2;
        for (int64_t oh = 0; oh < h2; ++oh) {
          const int64_t ih = oh + di - pad;
          double* dst = row + oh * w2;
          if (ih < 0 || ih >= h) {
            std::fill(dst, dst + w2, 0.0);
            continue;
          }
          const int64_t ow_lo = std::max<int64_t>(0, pad - dj);
          const int64_t ow_hi = std::min<int64_t>(w2, w + pad - dj);
          if (ow_lo > 0) std::fill(dst, dst + ow_lo, 0.0);
          if (ow_hi > ow_lo)
            std::memcpy(dst + ow_lo, plane + ih * w + (ow_lo + dj - pad),
                        static_cast<size_t>(ow_hi - ow_lo) * sizeof(double));
          if (ow_hi < w2) std::fill(dst + ow_hi, dst + w2, 0.0);
        }
      }
    }
  }
}

// Adjoint of im2col: accumulates patch gradients back into gx (C,H,W).
void col2im_add(const double* col, int64_t c_in, int64_t h, int64_t w,
                int64_t k, int64_t pad, int64_t h2, int64_t w2, double* gx) {
  const int64_t hw2 = h2 * w2;
  for (int64_t c = 0; c < c_in; ++c) {
    double* plane = gx + c * h * w;
    for (int64_t di = 0; di < k; ++di) {
      for (int64_t dj = 0; dj < k; ++dj) {
        const double* row = col + ((c * k + di) * k + dj) * hw2;
        for (int64_t oh = 0; oh < h2; ++oh) {
          const int64_t ih = oh + di - pad;
          if (ih < 0 || ih >= h) continue;
          const int64_t ow_lo = std::max<int64_t>(0, pad - dj);
          const int64_t ow_hi = std::min<int64_t>(w2, w + pad - dj);
          const double* src = row + oh * w2;
          double* dst = plane + ih * w + (ow_lo + dj - pad);
          for (int64_t ow = ow_lo; ow < ow_hi; ++ow)
            dst[ow - ow_lo] += src[ow];
        }
      }
    }
  }
}

}  // namespace

VarId Tape::push(Tensor value, bool requires_grad) {
  nodes_.push_back(Node{std::move(value), Tensor{}, requires_grad, false});
  return VarId{static_cast<int32_t>(nodes_.size() - 1)};
}

VarId Tape::leaf(Tensor value) { return push(std::move(value), true); }
VarId Tape::constant(Tensor value) { return push(std::move(value), false); }

Tensor& Tape::grad_buf(VarId id) {
  Node& n = nodes_[id.idx];
  if (!n.grad_ready) {
    n.grad = Tensor::zeros(n.value.shape);
    n.grad_ready = true;
  }
  return n.grad;
}

const Tensor& Tape::grad(VarId id) { return grad_buf(id); }

void Tape::accumulate(VarId id, const double* g, int64_t n) {
  Tensor& buf = grad_buf(id);
  for (int64_t i = 0; i < n; ++i) buf.data[static_cast<size_t>(i)] += g[i];
}

void Tape::backward(VarId scalar_loss) {
  const Tensor& loss = val(scalar_loss);
  if (loss.numel() != 1)
    raise(ErrorCode::kInvalidArgument, "backward: loss must be scalar");
  grad_buf(scalar_loss).data[0] = 1.0;
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
}

// ---------------------------------------------------------------- small ops

VarId Tape::add(VarId a, VarId b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  if (!ta.same_shape(tb)) raise(ErrorCode::kShapeMismatch, "add: shape mismatch");
  Tensor out = ta;
  for (int64_t i = 0; i < out.numel(); ++i) out.data[i] += tb.data[i];
  VarId y = push(std::move(out), requires_grad(a) || requires_grad(b));
  if (requires_grad(y)) {
    steps_.push_back([this, a, b, y]() {
      const Tensor& g = grad_buf(y);
      if (requires_grad(a)) accumulate(a, g.ptr(), g.numel());
      if (requires_grad(b)) accumulate(b, g.ptr(), g.numel());
    });
  }
  return y;
}

VarId Tape::add_scalar(VarId x, double c) {
  Tensor out = val(x);
  for (double& v : out.data) v += c;
  VarId y = push(std::move(out), requires_grad(x));
  if (requires_grad(y)) {
    steps_.push_back([this, x, y]() {
      const Tensor& g = grad_buf(y);
      accumulate(x, g.ptr(), g.numel());
    });
  }
  return y;
}

VarId Tape::relu(VarId x) {
  Tensor out = val(x);
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  VarId y = push(std::move(out), requires_grad(x));
  if (requires_grad(y)) {
    steps_.push_back([this, x, y]() {
      const Tensor& g = grad_buf(y);
      const Tensor& xv = val(x);
      Tensor& gx = grad_buf(x);
      for (int64_t i = 0; i < g.numel(); ++i)
        if (xv.data[i] > 0.0) gx.data[i] += g.data[i];
    });
  }
  return y;
}

VarId Tape::leaky_relu(VarId x, double slope) {
  Tensor out = val(x);
  for (double& v : out.data) v = v > 0.0 ? v : slope * v;
  VarId y = push(std::move(out), requires_grad(x));
  if (requires_grad(y)) {
    steps_.push_back([this, x, y, slope]() {
      const Tensor& g = grad_buf(y);
      const Tensor& xv = val(x);
      Tensor& gx = grad_buf(x);
      for (int64_t i = 0; i < g.numel(); ++i)
        gx.data[i] += xv.data[i] > 0.0 ? g.data[i] : slope * g.data[i];
    });
  }
  return y;
}

VarId Tape::sigmoid_scale(VarId x, double ceiling) {
  Tensor out = val(x);
  for (double& v : out.data) v = ceiling / (1.0 + std::exp(-v));
  VarId y = push(std::move(out), requires_grad(x));
  if (requires_grad(y)) {
    steps_.push_back([this, x, y, ceiling]() {
      const Tensor& g = grad_buf(y);
      const Tensor& yv = val(y);
      Tensor& gx = grad_buf(x);
      for (int64_t i = 0; i < g.numel(); ++i) {
        const double s = yv.data[i] / ceiling;
        gx.data[i] += g.data[i] * ceiling * s * (1.0 - s);
      }
    });
  }
  return y;
}

VarId Tape::atan2v(VarId ynum, VarId xden) {
  const Tensor& ty = val(ynum);
  const Tensor& tx = val(xden);
  if (!ty.same_shape(tx)) raise(ErrorCode::kShapeMismatch, "atan2v: shape mismatch");
  Tensor out(ty.shape);
  for (int64_t i = 0; i < out.numel(); ++i)
    out.data[i] = std::atan2(ty.data[i], tx.data[i]);
  VarId z = push(std::move(out), requires_grad(ynum) || requires_grad(xden));
  if (requires_grad(z)) {
    steps_.push_back([this, ynum, xden, z]() {
      const Tensor& g = grad_buf(z);
      const Tensor& yv = val(ynum);
      const Tensor& xv = val(xden);
      const bool need_y = requires_grad(ynum);
      const bool need_x = requires_grad(xden);
      Tensor* gy = need_y ? &grad_buf(ynum) : nullptr;
      Tensor* gx = need_x ? &grad_buf(xden) : nullptr;
      for (int64_t i = 0; i < g.numel(); ++i) {
        const double r2 = yv.data[i] * yv.data[i] + xv.data[i] * xv.data[i];
        if (r2 < 1e-24) continue;  // origin: zero subgradient
        if (need_y) gy->data[i] += g.data[i] * xv.data[i] / r2;
        if (need_x) gx->data[i] -= g.data[i] * yv.data[i] / r2;
      }
    });
  }
  return z;
}

// ---------------------------------------------------------------- dense ops

VarId Tape::linear(VarId x, VarId w, VarId b) {
  const Tensor& tx = val(x);
  const Tensor& tw = val(w);
  const Tensor& tb = val(b);
  if (tx.rank() != 2 || tw.rank() != 2 || tb.rank() != 1 ||
      tx.dim(1) != tw.dim(1) || tw.dim(0) != tb.dim(0))
    raise(ErrorCode::kShapeMismatch, "linear: inconsistent shapes");
  const int64_t n = tx.dim(0), in = tx.dim(1), out_dim = tw.dim(0);

  Tensor out({n, out_dim});
  {
    CMapRow xm(tx.ptr(), n, in), wm(tw.ptr(), out_dim, in);
    MapRow ym(out.ptr(), n, out_dim);
    ym.noalias() = xm * wm.transpose();
    for (int64_t i = 0; i < n; ++i)
      for (int64_t o = 0; o < out_dim; ++o) out.data[i * out_dim + o] += tb.data[o];
  }
  VarId y = push(std::move(out),
                 requires_grad(x) || requires_grad(w) || requires_grad(b));
  if (requires_grad(y)) {
    steps_.push_back([this, x, w, b, y, n, in, out_dim]() {
      const Tensor& g = grad_buf(y);
      CMapRow gm(g.ptr(), n, out_dim);
      if (requires_grad(x)) {
        CMapRow wm(val(w).ptr(), out_dim, in);
        MapRow gxm(grad_buf(x).ptr(), n, in);
        gxm.noalias() += gm * wm;
      }
      if (requires_grad(w)) {
        CMapRow xm(val(x).ptr(), n, in);
        MapRow gwm(grad_buf(w).ptr(), out_dim, in);
        gwm.noalias() += gm.transpose() * xm;
      }
      if (requires_grad(b)) {
        Tensor& gb = grad_buf(b);
        for (int64_t i = 0; i < n; ++i)
          for (int64_t o = 0; o < out_dim; ++o) gb.data[o] += g.data[i * out_dim + o];
      }
    });
  }
  return y;
}

VarId Tape::slice_cols(VarId x, int64_t start, int64_t len) {
  const Tensor& tx = val(x);
  if (tx.rank() != 2 || start < 0 || start + len > tx.dim(1))
    raise(ErrorCode::kShapeMismatch, "slice_cols: bad range");
  const int64_t n = tx.dim(0), cols = tx.dim(1);
  Tensor out({n, len});
  for (int64_t i = 0; i < n; ++i)
    std::memcpy(out.ptr() + i * len, tx.ptr() + i * cols + start,
                static_cast<size_t>(len) * sizeof(double));
  VarId y = push(std::move(out), requires_grad(x));
  if (requires_grad(y)) {
    steps_.push_back([this, x, y, start, len, n, cols]() {
      const Tensor& g = grad_buf(y);
      Tensor& gx = grad_buf(x);
      for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < len; ++j)
          gx.data[i * cols + start + j] += g.data[i * len + j];
    });
  }
  return y;
}

VarId Tape::embed_rows_normalized(VarId table, const std::vector<int>& rows) {
  const Tensor& tt = val(table);
  if (tt.rank() != 2) raise(ErrorCode::kShapeMismatch, "embed_rows: table must be 2-d");
  const int64_t v = tt.dim(0), d = tt.dim(1);
  const auto n = static_cast<int64_t>(rows.size());
  for (int r : rows)
    if (r < 0 || r >= v) raise(ErrorCode::kInvalidArgument, "embed_rows: row out of range");

  Tensor out({n, d});
  std::vector<double> norms(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    const double* src = tt.ptr() + static_cast<int64_t>(rows[i]) * d;
    double s = 0.0;
    for (int64_t j = 0; j < d; ++j) s += src[j] * src[j];
    const double norm = std::sqrt(std::max(s, 1e-24));
    norms[static_cast<size_t>(i)] = norm;
    for (int64_t j = 0; j < d; ++j) out.data[i * d + j] = src[j] / norm;
  }
  VarId y = push(std::move(out), requires_grad(table));
  if (requires_grad(y)) {
    steps_.push_back([this, table, y, rows, norms, n, d]() {
      const Tensor& g = grad_buf(y);
      const Tensor& yv = val(y);
      Tensor& gt = grad_buf(table);
      for (int64_t i = 0; i < n; ++i) {
        const double* gi = g.ptr() + i * d;
        const double* ei = yv.ptr() + i * d;
        double dot = 0.0;
        for (int64_t j = 0; j < d; ++j) dot += gi[j] * ei[j];
        double* dst = gt.ptr() + static_cast<int64_t>(rows[static_cast<size_t>(i)]) * d;
        const double inv = 1.0 / norms[static_cast<size_t>(i)];
        for (int64_t j = 0; j < d; ++j) dst[j] += (gi[j] - dot * ei[j]) * inv;
      }
    });
  }
  return y;
}

// -------------------------------------------------------------- spatial ops

VarId Tape::conv2d(VarId x, VarId w, VarId b, int pad) {
  const Tensor& tx = val(x);
  const Tensor& tw = val(w);
  const Tensor& tb = val(b);
  check_4d(tx, "conv2d");
  check_4d(tw, "conv2d weight");
  if (tw.dim(1) != tx.dim(1) || tw.dim(2) != tw.dim(3) || tb.dim(0) != tw.dim(0))
    raise(ErrorCode::kShapeMismatch, "conv2d: inconsistent shapes");
  const int64_t n = tx.dim(0), c_in = tx.dim(1), h = tx.dim(2), win = tx.dim(3);
  const int64_t o = tw.dim(0), k = tw.dim(2), p = pad;
  const int64_t h2 = h + 2 * p - k + 1, w2 = win + 2 * p - k + 1;
  if (h2 <= 0 || w2 <= 0) raise(ErrorCode::kShapeMismatch, "conv2d: kernel larger than input");
  const int64_t r = c_in * k * k, hw2 = h2 * w2;

  Tensor out({n, o, h2, w2});
  {
    std::vector<double> col(static_cast<size_t>(r * hw2));
    CMapRow wm(tw.ptr(), o, r);
    for (int64_t i = 0; i < n; ++i) {
      im2col(tx.ptr() + i * c_in * h * win, c_in, h, win, k, p, h2, w2, col.data());
      CMapRow cm(col.data(), r, hw2);
      MapRow ym(out.ptr() + i * o * hw2, o, hw2);
      ym.noalias() = wm * cm;
      for (int64_t oc = 0; oc < o; ++oc)
        ym.row(oc).array() += tb.data[oc];
    }
  }
  VarId y = push(std::move(out),
                 requires_grad(x) || requires_grad(w) || requires_grad(b));
  if (requires_grad(y)) {
    steps_.push_back([this, x, w, b, y, n, c_in, h, win, o, k, p, h2, w2, r, hw2]() {
      const Tensor& g = grad_buf(y);
      const Tensor& txv = val(x);
      const Tensor& twv = val(w);
      const bool need_x = requires_grad(x);
      const bool need_w = requires_grad(w);
      const bool need_b = requires_grad(b);
      std::vector<double> col(static_cast<size_t>(r * hw2));
      std::vector<double> gcol(need_x ? static_cast<size_t>(r * hw2) : 0);
      for (int64_t i = 0; i < n; ++i) {
        CMapRow gm(g.ptr() + i * o * hw2, o, hw2);
        if (need_w || need_x)
          im2col(txv.ptr() + i * c_in * h * win, c_in, h, win, k, p, h2, w2, col.data());
        if (need_w) {
          MapRow gwm(grad_buf(w).ptr(), o, r);
          CMapRow cm(col.data(), r, hw2);
          gwm.noalias() += gm * cm.transpose();
        }
        if (need_x) {
          CMapRow wm(twv.ptr(), o, r);
          MapRow gc(gcol.data(), r, hw2);
          gc.noalias() = wm.transpose() * gm;
          col2im_add(gcol.data(), c_in, h, win, k, p, h2, w2,
                     grad_buf(x).ptr() + i * c_in * h * win);
        }
        if (need_b) {
          Tensor& gb = grad_buf(b);
          for (int64_t oc = 0; oc < o; ++oc) gb.data[oc] += gm.row(oc).sum();
        }
      }
    });
  }
  return y;
}

VarId Tape::tconv2d_2x2(VarId x, VarId w, VarId b) {
  const Tensor& tx = val(x);
  const Tensor& tw = val(w);
  const Tensor& tb = val(b);
  check_4d(tx, "tconv2d");
  check_4d(tw, "tconv2d weight");
  if (tw.dim(0) != tx.dim(1) || tw.dim(2) != 2 || tw.dim(3) != 2 ||
      tb.dim(0) != tw.dim(1))
    raise(ErrorCode::kShapeMismatch, "tconv2d_2x2: inconsistent shapes");
  const int64_t n = tx.dim(0), c = tx.dim(1), h = tx.dim(2), win = tx.dim(3);
  const int64_t o = tw.dim(1), hw = h * win;

  Tensor out({n, o, 2 * h, 2 * win});
  {
    RowMat wdd(o, c), ydd(o, hw);
    for (int64_t i = 0; i < n; ++i) {
      CMapRow xm(tx.ptr() + i * c * hw, c, hw);
      double* out_n = out.ptr() + i * o * (4 * hw);
      for (int64_t di = 0; di < 2; ++di) {
        for (int64_t dj = 0; dj < 2; ++dj) {
          for (int64_t cc = 0; cc < c; ++cc)
            for (int64_t oc = 0; oc < o; ++oc)
              wdd(oc, cc) = tw.data[((cc * o + oc) * 2 + di) * 2 + dj];
          ydd.noalias() = wdd * xm;
          for (int64_t oc = 0; oc < o; ++oc) {
            double* plane = out_n + oc * (2 * h) * (2 * win);
            for (int64_t ih = 0; ih < h; ++ih) {
              const double* src = ydd.data() + oc * hw + ih * win;
              double* dst = plane + (2 * ih + di) * (2 * win) + dj;
              const double bias = tb.data[oc];
              for (int64_t iw = 0; iw < win; ++iw) dst[2 * iw] = src[iw] + bias;
            }
          }
        }
      }
    }
  }
  VarId y = push(std::move(out),
                 requires_grad(x) || requires_grad(w) || requires_grad(b));
  if (requires_grad(y)) {
    steps_.push_back([this, x, w, b, y, n, c, h, win, o, hw]() {
      const Tensor& g = grad_buf(y);
      const Tensor& txv = val(x);
      const Tensor& twv = val(w);
      const bool need_x = requires_grad(x);
      const bool need_w = requires_grad(w);
      const bool need_b = requires_grad(b);
      RowMat gdd(o, hw), wdd(o, c);
      for (int64_t i = 0; i < n; ++i) {
        CMapRow xm(txv.ptr() + i * c * hw, c, hw);
        const double* g_n = g.ptr() + i * o * (4 * hw);
        for (int64_t di = 0; di < 2; ++di) {
          for (int64_t dj = 0; dj < 2; ++dj) {
            for (int64_t oc = 0; oc < o; ++oc) {
              const double* plane = g_n + oc * (2 * h) * (2 * win);
              for (int64_t ih = 0; ih < h; ++ih) {
                const double* src = plane + (2 * ih + di) * (2 * win) + dj;
                double* dst = gdd.data() + oc * hw + ih * win;
                for (int64_t iw = 0; iw < win; ++iw) dst[iw] = src[2 * iw];
              }
            }
            if (need_w) {
              RowMat gw = gdd * xm.transpose();  // (O, C)
              Tensor& gwt = grad_buf(w);
              for (int64_t cc = 0; cc < c; ++cc)
                for (int64_t oc = 0; oc < o; ++oc)
                  gwt.data[((cc * o + oc) * 2 + di) * 2 + dj] += gw(oc, cc);
            }
            if (need_x) {
              for (int64_t cc = 0; cc < c; ++cc)
                for (int64_t oc = 0; oc < o; ++oc)
                  wdd(oc, cc) = twv.data[((cc * o + oc) * 2 + di) * 2 + dj];
              MapRow gxm(grad_buf(x).ptr() + i * c * hw, c, hw);
              gxm.noalias() += wdd.transpose() * gdd;
            }
            if (need_b) {
              Tensor& gb = grad_buf(b);
              for (int64_t oc = 0; oc < o; ++oc)
                gb.data[oc] += gdd.row(oc).sum();
            }
          }
        }
      }
    });
  }
  return y;
}

VarId Tape::batchnorm(VarId x, VarId gamma, VarId beta,
                      const Tensor& running_mean, const Tensor& running_var,
                      bool use_batch_stats, const std::string& stats_prefix,
                      std::vector<BnBatchStats>* stats_out) {
  const Tensor& tx = val(x);
  check_4d(tx, "batchnorm");
  const int64_t n = tx.dim(0), c = tx.dim(1), h = tx.dim(2), w = tx.dim(3);
  const Tensor& tg = val(gamma);
  const Tensor& tb = val(beta);
  if (tg.numel() != c || tb.numel() != c || running_mean.numel() != c ||
      running_var.numel() != c)
    raise(ErrorCode::kShapeMismatch, "batchnorm: channel mismatch");
  const int64_t hw = h * w;
  const auto s = static_cast<double>(n * hw);

  std::vector<double> mean(static_cast<size_t>(c)), inv_std(static_cast<size_t>(c));
  Tensor batch_mean({c}), batch_var({c});
  for (int64_t cc = 0; cc < c; ++cc) {
    double mu, var;
    if (use_batch_stats) {
      double sum = 0.0, sq = 0.0;
      for (int64_t i = 0; i < n; ++i) {
        const double* plane = tx.ptr() + (i * c + cc) * hw;
        for (int64_t j = 0; j < hw; ++j) {
          sum += plane[j];
          sq += plane[j] * plane[j];
        }
      }
      mu = sum / s;
      var = std::max(0.0, sq / s - mu * mu);
      batch_mean.data[cc] = mu;
      batch_var.data[cc] = var;
    } else {
      mu = running_mean.data[cc];
      var = running_var.data[cc];
    }
    mean[static_cast<size_t>(cc)] = mu;
    inv_std[static_cast<size_t>(cc)] = 1.0 / std::sqrt(var + kBnEps);
  }
  if (use_batch_stats && stats_out != nullptr)
    stats_out->push_back(BnBatchStats{stats_prefix, batch_mean, batch_var});

  Tensor out(tx.shape);
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t cc = 0; cc < c; ++cc) {
      const double* src = tx.ptr() + (i * c + cc) * hw;
      double* dst = out.ptr() + (i * c + cc) * hw;
      const double mu = mean[static_cast<size_t>(cc)];
      const double is = inv_std[static_cast<size_t>(cc)];
      const double gc = tg.data[cc], bc = tb.data[cc];
      for (int64_t j = 0; j < hw; ++j) dst[j] = gc * (src[j] - mu) * is + bc;
    }
  }
  VarId y = push(std::move(out), requires_grad(x) || requires_grad(gamma) ||
                                     requires_grad(beta));
  if (requires_grad(y)) {
    steps_.push_back([this, x, gamma, beta, y, n, c, hw, s, mean, inv_std,
                      use_batch_stats]() {
      const Tensor& g = grad_buf(y);
      const Tensor& txv = val(x);
      const Tensor& tgv = val(gamma);
      const bool need_x = requires_grad(x);
      for (int64_t cc = 0; cc < c; ++cc) {
        const double mu = mean[static_cast<size_t>(cc)];
        const double is = inv_std[static_cast<size_t>(cc)];
        double sum_g = 0.0, sum_gx = 0.0;  // sum g, sum g*xhat
        for (int64_t i = 0; i < n; ++i) {
          const double* gp = g.ptr() + (i * c + cc) * hw;
          const double* xp = txv.ptr() + (i * c + cc) * hw;
          for (int64_t j = 0; j < hw; ++j) {
            sum_g += gp[j];
            sum_gx += gp[j] * (xp[j] - mu) * is;
          }
        }
        if (requires_grad(beta)) grad_buf(beta).data[cc] += sum_g;
        if (requires_grad(gamma)) grad_buf(gamma).data[cc] += sum_gx;
        if (need_x) {
          Tensor& gx = grad_buf(x);
          const double gc = tgv.data[cc];
          for (int64_t i = 0; i < n; ++i) {
            const double* gp = g.ptr() + (i * c + cc) * hw;
            const double* xp = txv.ptr() + (i * c + cc) * hw;
            double* dst = gx.ptr() + (i * c + cc) * hw;
            if (use_batch_stats) {
              for (int64_t j = 0; j < hw; ++j) {
                const double xhat = (xp[j] - mu) * is;
                dst[j] += gc * is * (gp[j] - sum_g / s - xhat * sum_gx / s);
              }
            } else {
              for (int64_t j = 0; j < hw; ++j) dst[j] += gc * is * gp[j];
            }
          }
        }
      }
    });
  }
  return y;
}

VarId Tape::film(VarId x, VarId gamma, VarId beta) {
  const Tensor& tx = val(x);
  check_4d(tx, "film");
  const int64_t n = tx.dim(0), c = tx.dim(1), hw = tx.dim(2) * tx.dim(3);
  const Tensor& tg = val(gamma);
  const Tensor& tb = val(beta);
  if (tg.rank() != 2 || tg.dim(0) != n || tg.dim(1) != c || !tb.same_shape(tg))
    raise(ErrorCode::kShapeMismatch, "film: modulation shape mismatch");

  Tensor out(tx.shape);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t cc = 0; cc < c; ++cc) {
      const double gc = tg.data[i * c + cc], bc = tb.data[i * c + cc];
      const double* src = tx.ptr() + (i * c + cc) * hw;
      double* dst = out.ptr() + (i * c + cc) * hw;
      for (int64_t j = 0; j < hw; ++j) dst[j] = gc * src[j] + bc;
    }
  VarId y = push(std::move(out), requires_grad(x) || requires_grad(gamma) ||
                                     requires_grad(beta));
  if (requires_grad(y)) {
    steps_.push_back([this, x, gamma, beta, y, n, c, hw]() {
      const Tensor& g = grad_buf(y);
      const Tensor& txv = val(x);
      const Tensor& tgv = val(gamma);
      for (int64_t i = 0; i < n; ++i)
        for (int64_t cc = 0; cc < c; ++cc) {
          const double* gp = g.ptr() + (i * c + cc) * hw;
          const double* xp = txv.ptr() + (i * c + cc) * hw;
          if (requires_grad(x)) {
            double* dst = grad_buf(x).ptr() + (i * c + cc) * hw;
            const double gc = tgv.data[i * c + cc];
            for (int64_t j = 0; j < hw; ++j) dst[j] += gc * gp[j];
          }
          if (requires_grad(gamma)) {
            double acc = 0.0;
            for (int64_t j = 0; j < hw; ++j) acc += gp[j] * xp[j];
            grad_buf(gamma).data[i * c + cc] += acc;
          }
          if (requires_grad(beta)) {
            double acc = 0.0;
            for (int64_t j = 0; j < hw; ++j) acc += gp[j];
            grad_buf(beta).data[i * c + cc] += acc;
          }
        }
    });
  }
  return y;
}

VarId Tape::avgpool2x2(VarId x) {
  const Tensor& tx = val(x);
  check_4d(tx, "avgpool2x2");
  const int64_t n = tx.dim(0), c = tx.dim(1), h = tx.dim(2), w = tx.dim(3);
  if (h % 2 != 0 || w % 2 != 0)
    raise(ErrorCode::kShapeMismatch, "avgpool2x2: spatial dims must be even");
  const int64_t h2 = h / 2, w2 = w / 2;
  Tensor out({n, c, h2, w2});
  for (int64_t i = 0; i < n * c; ++i) {
    const double* src = tx.ptr() + i * h * w;
    double* dst = out.ptr() + i * h2 * w2;
    for (int64_t oh = 0; oh < h2; ++oh)
      for (int64_t ow = 0; ow < w2; ++ow)
        dst[oh * w2 + ow] = 0.25 * (src[(2 * oh) * w + 2 * ow] +
                                    src[(2 * oh) * w + 2 * ow + 1] +
                                    src[(2 * oh + 1) * w + 2 * ow] +
                                    src[(2 * oh + 1) * w + 2 * ow + 1]);
  }
  VarId y = push(std::move(out), requires_grad(x));
  if (requires_grad(y)) {
    steps_.push_back([this, x, y, n, c, h, w, h2, w2]() {
      const Tensor& g = grad_buf(y);
      Tensor& gx = grad_buf(x);
      for (int64_t i = 0; i < n * c; ++i) {
        const double* gp = g.ptr() + i * h2 * w2;
        double* dst = gx.ptr() + i * h * w;
        for (int64_t oh = 0; oh < h2; ++oh)
          for (int64_t ow = 0; ow < w2; ++ow) {
            const double v = 0.25 * gp[oh * w2 + ow];
            dst[(2 * oh) * w + 2 * ow] += v;
            dst[(2 * oh) * w + 2 * ow + 1] += v;
            dst[(2 * oh + 1) * w + 2 * ow] += v;
            dst[(2 * oh + 1) * w + 2 * ow + 1] += v;
          }
      }
    });
  }
  return y;
}

VarId Tape::concat_channels(VarId a, VarId b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  check_4d(ta, "concat_channels");
  check_4d(tb, "concat_channels");
  if (ta.dim(0) != tb.dim(0) || ta.dim(2) != tb.dim(2) || ta.dim(3) != tb.dim(3))
    raise(ErrorCode::kShapeMismatch, "concat_channels: spatial/batch mismatch");
  const int64_t n = ta.dim(0), c1 = ta.dim(1), c2 = tb.dim(1);
  const int64_t hw = ta.dim(2) * ta.dim(3);
  Tensor out({n, c1 + c2, ta.dim(2), ta.dim(3)});
  for (int64_t i = 0; i < n; ++i) {
    std::memcpy(out.ptr() + i * (c1 + c2) * hw, ta.ptr() + i * c1 * hw,
                static_cast<size_t>(c1 * hw) * sizeof(double));
    std::memcpy(out.ptr() + (i * (c1 + c2) + c1) * hw, tb.ptr() + i * c2 * hw,
                static_cast<size_t>(c2 * hw) * sizeof(double));
  }
  VarId y = push(std::move(out), requires_grad(a) || requires_grad(b));
  if (requires_grad(y)) {
    steps_.push_back([this, a, b, y, n, c1, c2, hw]() {
      const Tensor& g = grad_buf(y);
      for (int64_t i = 0; i < n; ++i) {
        if (requires_grad(a)) {
          Tensor& ga = grad_buf(a);
          const double* src = g.ptr() + i * (c1 + c2) * hw;
          double* dst = ga.ptr() + i * c1 * hw;
          for (int64_t j = 0; j < c1 * hw; ++j) dst[j] += src[j];
        }
        if (requires_grad(b)) {
          Tensor& gb = grad_buf(b);
          const double* src = g.ptr() + (i * (c1 + c2) + c1) * hw;
          double* dst = gb.ptr() + i * c2 * hw;
          for (int64_t j = 0; j < c2 * hw; ++j) dst[j] += src[j];
        }
      }
    });
  }
  return y;
}

VarId Tape::pad_hw(VarId x, int64_t h_to, int64_t w_to) {
  const Tensor& tx = val(x);
  check_4d(tx, "pad_hw");
  const int64_t n = tx.dim(0), c = tx.dim(1), h = tx.dim(2), w = tx.dim(3);
  if (h_to < h || w_to < w) raise(ErrorCode::kShapeMismatch, "pad_hw: target smaller than input");
  Tensor out({n, c, h_to, w_to});
  for (int64_t i = 0; i < n * c; ++i)
    for (int64_t ih = 0; ih < h; ++ih)
      std::memcpy(out.ptr() + (i * h_to + ih) * w_to, tx.ptr() + (i * h + ih) * w,
                  static_cast<size_t>(w) * sizeof(double));
  VarId y = push(std::move(out), requires_grad(x));
  if (requires_grad(y)) {
    steps_.push_back([this, x, y, n, c, h, w, h_to, w_to]() {
      const Tensor& g = grad_buf(y);
      Tensor& gx = grad_buf(x);
      for (int64_t i = 0; i < n * c; ++i)
        for (int64_t ih = 0; ih < h; ++ih) {
          const double* src = g.ptr() + (i * h_to + ih) * w_to;
          double* dst = gx.ptr() + (i * h + ih) * w;
          for (int64_t iw = 0; iw < w; ++iw) dst[iw] += src[iw];
        }
    });
  }
  return y;
}

VarId Tape::head_layout(VarId x, int channel, int64_t t_frames, int64_t f_bins) {
  const Tensor& tx = val(x);
  check_4d(tx, "head_layout");
  const int64_t n = tx.dim(0), c = tx.dim(1), hf = tx.dim(2), wt = tx.dim(3);
  if (channel < 0 || channel >= c || t_frames > wt || f_bins > hf || f_bins < 1)
    raise(ErrorCode::kShapeMismatch, "head_layout: bad channel or crop");
  const int64_t f_out = f_bins + 1;  // Nyquist bin restored by replication
  Tensor out({n, t_frames, f_out});
  for (int64_t i = 0; i < n; ++i) {
    const double* plane = tx.ptr() + (i * c + channel) * hf * wt;
    for (int64_t t = 0; t < t_frames; ++t) {
      double* dst = out.ptr() + (i * t_frames + t) * f_out;
      for (int64_t f = 0; f < f_bins; ++f) dst[f] = plane[f * wt + t];
      dst[f_bins] = plane[(f_bins - 1) * wt + t];
    }
  }
  VarId y = push(std::move(out), requires_grad(x));
  if (requires_grad(y)) {
    steps_.push_back([this, x, y, channel, n, c, hf, wt, t_frames, f_bins, f_out]() {
      const Tensor& g = grad_buf(y);
      Tensor& gx = grad_buf(x);
      for (int64_t i = 0; i < n; ++i) {
        double* plane = gx.ptr() + (i * c + channel) * hf * wt;
        for (int64_t t = 0; t < t_frames; ++t) {
          const double* src = g.ptr() + (i * t_frames + t) * f_out;
          for (int64_t f = 0; f < f_bins; ++f) plane[f * wt + t] += src[f];
          plane[(f_bins - 1) * wt + t] += src[f_bins];
        }
      }
    });
  }
  return y;
}

// ---------------------------------------------------------------- spectral

std::pair<VarId, VarId> Tape::polar_mask(
    VarId m, VarId psi, std::vector<const ComplexSpectrogram*> specs) {
  const Tensor& tm = val(m);
  const Tensor& tp = val(psi);
  if (!tm.same_shape(tp) || tm.rank() != 3)
    raise(ErrorCode::kShapeMismatch, "polar_mask: mask/phase mismatch");
  const int64_t n = tm.dim(0), t = tm.dim(1), f = tm.dim(2);
  if (static_cast<int64_t>(specs.size()) != n)
    raise(ErrorCode::kShapeMismatch, "polar_mask: one spectrogram per batch item");
  for (const auto* s : specs)
    if (s->frames != t || s->bins != f)
      raise(ErrorCode::kShapeMismatch, "polar_mask: spectrogram shape mismatch");

  Tensor sre({n, t, f}), sim({n, t, f});
  const int64_t tf = t * f;
  for (int64_t i = 0; i < n; ++i) {
    const auto& x = specs[static_cast<size_t>(i)]->data;
    for (int64_t j = 0; j < tf; ++j) {
      const double mm = tm.data[i * tf + j];
      const double ps = tp.data[i * tf + j];
      const double cs = std::cos(ps), sn = std::sin(ps);
      const double xr = x[static_cast<size_t>(j)].real();
      const double xi = x[static_cast<size_t>(j)].imag();
      sre.data[i * tf + j] = mm * (xr * cs - xi * sn);
      sim.data[i * tf + j] = mm * (xr * sn + xi * cs);
    }
  }
  const bool rg = requires_grad(m) || requires_grad(psi);
  VarId yre = push(std::move(sre), rg);
  VarId yim = push(std::move(sim), rg);
  if (rg) {
    steps_.push_back([this, m, psi, yre, yim, specs, n, tf]() {
      const Tensor& gre = grad_buf(yre);
      const Tensor& gim = grad_buf(yim);
      const Tensor& tmv = val(m);
      const Tensor& tpv = val(psi);
      for (int64_t i = 0; i < n; ++i) {
        const auto& x = specs[static_cast<size_t>(i)]->data;
        for (int64_t j = 0; j < tf; ++j) {
          const double ps = tpv.data[i * tf + j];
          const double cs = std::cos(ps), sn = std::sin(ps);
          const double xr = x[static_cast<size_t>(j)].real();
          const double xi = x[static_cast<size_t>(j)].imag();
          const double re_dir = xr * cs - xi * sn;   // dS_re/dm
          const double im_dir = xr * sn + xi * cs;   // dS_im/dm
          const double gr = gre.data[i * tf + j];
          const double gi = gim.data[i * tf + j];
          if (requires_grad(m))
            grad_buf(m).data[i * tf + j] += gr * re_dir + gi * im_dir;
          if (requires_grad(psi)) {
            const double mm = tmv.data[i * tf + j];
            grad_buf(psi).data[i * tf + j] += mm * (-gr * im_dir + gi * re_dir);
          }
        }
      }
    });
  }
  return {yre, yim};
}

VarId Tape::istft_wave(VarId s_re, VarId s_im, const StftConfig& cfg,
                       int64_t source_len) {
  cfg.validate();
  const Tensor& tre = val(s_re);
  const Tensor& tim = val(s_im);
  if (!tre.same_shape(tim) || tre.rank() != 3)
    raise(ErrorCode::kShapeMismatch, "istft_wave: re/im mismatch");
  const int64_t n = tre.dim(0), t = tre.dim(1), f = tre.dim(2);
  const int64_t w = cfg.window_size, hop = cfg.hop_size;
  if (f != cfg.bins())
    raise(ErrorCode::kShapeMismatch, "istft_wave: bin count does not match config");
  const int64_t pad = cfg.center_pad ? w / 2 : 0;
  const int64_t total = (t - 1) * hop + w;
  if (pad + source_len > total)
    raise(ErrorCode::kInvalidArgument, "istft_wave: source_len exceeds coverage");

  const std::vector<double> window = make_window(cfg.window, cfg.window_size);
  std::vector<double> den(static_cast<size_t>(total), 0.0);
  for (int64_t tt = 0; tt < t; ++tt)
    for (int64_t k = 0; k < w; ++k)
      den[static_cast<size_t>(tt * hop + k)] +=
          window[static_cast<size_t>(k)] * window[static_cast<size_t>(k)];
  for (int64_t i = 0; i < source_len; ++i)
    if (den[static_cast<size_t>(pad + i)] < 1e-8)
      raise(ErrorCode::kColaViolation, "istft_wave: denominator below 1e-8");

  Tensor out({n, source_len});
  {
    std::vector<std::complex<double>> bins(static_cast<size_t>(f));
    std::vector<double> acc(static_cast<size_t>(total));
    for (int64_t i = 0; i < n; ++i) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int64_t tt = 0; tt < t; ++tt) {
        for (int64_t ff = 0; ff < f; ++ff)
          bins[static_cast<size_t>(ff)] = {tre.data[(i * t + tt) * f + ff],
                                           tim.data[(i * t + tt) * f + ff]};
        std::vector<double> frame = irfft(bins, static_cast<size_t>(w));
        for (int64_t k = 0; k < w; ++k)
          acc[static_cast<size_t>(tt * hop + k)] +=
              frame[static_cast<size_t>(k)] * window[static_cast<size_t>(k)];
      }
      for (int64_t j = 0; j < source_len; ++j)
        out.data[i * source_len + j] =
            acc[static_cast<size_t>(pad + j)] / den[static_cast<size_t>(pad + j)];
    }
  }
  VarId y = push(std::move(out), requires_grad(s_re) || requires_grad(s_im));
  if (requires_grad(y)) {
    steps_.push_back([this, s_re, s_im, y, n, t, f, w, hop, pad, total,
                      source_len, window, den]() {
      const Tensor& g = grad_buf(y);
      const bool need_re = requires_grad(s_re);
      const bool need_im = requires_grad(s_im);
      std::vector<double> gp(static_cast<size_t>(total));
      std::vector<double> seg(static_cast<size_t>(w));
      for (int64_t i = 0; i < n; ++i) {
        std::fill(gp.begin(), gp.end(), 0.0);
        for (int64_t j = 0; j < source_len; ++j)
          gp[static_cast<size_t>(pad + j)] =
              g.data[i * source_len + j] / den[static_cast<size_t>(pad + j)];
        for (int64_t tt = 0; tt < t; ++tt) {
          for (int64_t k = 0; k < w; ++k)
            seg[static_cast<size_t>(k)] = gp[static_cast<size_t>(tt * hop + k)] *
                                          window[static_cast<size_t>(k)];
          auto u = rfft(seg);
          // adjoint of the one-sided inverse transform: interior bins carry
          // the hermitian-symmetry factor 2, edge bins none and no imag part
          for (int64_t ff = 0; ff < f; ++ff) {
            const bool edge = (ff == 0 || ff == w / 2);
            const double scale = (edge ? 1.0 : 2.0) / static_cast<double>(w);
            if (need_re)
              grad_buf(s_re).data[(i * t + tt) * f + ff] +=
                  scale * u[static_cast<size_t>(ff)].real();
            if (need_im && !edge)
              grad_buf(s_im).data[(i * t + tt) * f + ff] +=
                  scale * u[static_cast<size_t>(ff)].imag();
          }
        }
      }
    });
  }
  return y;
}

VarId Tape::dot_const(VarId x, const Tensor& w) {
  const Tensor& tx = val(x);
  if (!tx.same_shape(w))
    raise(ErrorCode::kShapeMismatch, "dot_const: weight shape mismatch");
  double acc = 0.0;
  for (int64_t i = 0; i < tx.numel(); ++i) acc += tx.data[i] * w.data[i];
  VarId y = push(Tensor::scalar(acc), requires_grad(x));
  if (requires_grad(y)) {
    steps_.push_back([this, x, y, w]() {
      const double go = grad_buf(y).data[0];
      Tensor& gx = grad_buf(x);
      for (int64_t i = 0; i < gx.numel(); ++i) gx.data[i] += go * w.data[i];
    });
  }
  return y;
}

VarId Tape::masked_l1(VarId est, const Tensor& ref, const Tensor& include) {
  const Tensor& te = val(est);
  if (!te.same_shape(ref))
    raise(ErrorCode::kShapeMismatch, "masked_l1: est/ref shape mismatch");
  const bool use_mask = include.numel() > 0;
  if (use_mask && !include.same_shape(ref))
    raise(ErrorCode::kShapeMismatch, "masked_l1: mask shape mismatch");

  int64_t count = 0;
  double sum = 0.0;
  for (int64_t i = 0; i < te.numel(); ++i) {
    if (use_mask && include.data[i] == 0.0) continue;
    sum += std::abs(te.data[i] - ref.data[i]);
    ++count;
  }
  if (count == 0) count = 1;  // fully masked: zero loss, zero gradient
  Tensor out = Tensor::scalar(sum / static_cast<double>(count));
  VarId y = push(std::move(out), requires_grad(est));
  if (requires_grad(y)) {
    // copies of ref/include keep the closure self-contained
    steps_.push_back([this, est, y, ref, include, use_mask, count]() {
      const double go = grad_buf(y).data[0];
      const Tensor& te2 = val(est);
      Tensor& ge = grad_buf(est);
      const double inv = go / static_cast<double>(count);
      for (int64_t i = 0; i < te2.numel(); ++i) {
        if (use_mask && include.data[i] == 0.0) continue;
        const double d = te2.data[i] - ref.data[i];
        ge.data[i] += d > 0.0 ? inv : (d < 0.0 ? -inv : 0.0);
      }
    });
  }
  return y;
}

}  // namespace lasskit
