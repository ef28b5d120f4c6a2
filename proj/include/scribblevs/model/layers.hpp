#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "scribblevs/common.hpp"
#include "scribblevs/model/param_store.hpp"
#include "scribblevs/model/tensor.hpp"
#include "scribblevs/rng.hpp"

namespace scribblevs {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ColVec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

namespace detail {

/// Unfolds x into a (Cin*9) x (H*W) patch matrix for 3x3 stride-1 pad-1
/// convolution. Out-of-image taps stay zero.
template <typename T>
void im2col3x3(const Tensor3<T>& x, std::vector<T>& col) {
  const int H = x.h, W = x.w;
  const size_t hw = static_cast<size_t>(H) * W;
  col.assign(static_cast<size_t>(x.c) * 9 * hw, T(0));
  for (int ci = 0; ci < x.c; ++ci) {
    const T* src = x.v.data() + static_cast<size_t>(ci) * hw;
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        T* dst = col.data() + (static_cast<size_t>(ci) * 9 + (dr + 1) * 3 + (dc + 1)) * hw;
        const int c0 = std::max(0, -dc);
        const int c1 = std::min(W, W - dc);
        if (c0 >= c1) continue;
        for (int r = 0; r < H; ++r) {
          const int rr = r + dr;
          if (rr < 0 || rr >= H) continue;
          std::copy(src + static_cast<size_t>(rr) * W + c0 + dc, src + static_cast<size_t>(rr) * W + c1 + dc,
                    dst + static_cast<size_t>(r) * W + c0);
        }
      }
    }
  }
}

/// Scatter-adds a patch-matrix gradient back onto the (Cin,H,W) input grid.
template <typename T>
void col2im3x3(const std::vector<T>& col, Tensor3<T>& dx) {
  const int H = dx.h, W = dx.w;
  const size_t hw = static_cast<size_t>(H) * W;
  for (int ci = 0; ci < dx.c; ++ci) {
    T* out = dx.v.data() + static_cast<size_t>(ci) * hw;
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const T* src = col.data() + (static_cast<size_t>(ci) * 9 + (dr + 1) * 3 + (dc + 1)) * hw;
        const int c0 = std::max(0, -dc);
        const int c1 = std::min(W, W - dc);
        if (c0 >= c1) continue;
        for (int r = 0; r < H; ++r) {
          const int rr = r + dr;
          if (rr < 0 || rr >= H) continue;
          T* orow = out + static_cast<size_t>(rr) * W + dc;
          const T* srow = src + static_cast<size_t>(r) * W;
          for (int c = c0; c < c1; ++c) orow[c] += srow[c];
        }
      }
    }
  }
}

}  // namespace detail

/// Reusable GEMM scratch shared across layer calls to avoid reallocation.
template <typename T>
struct ConvScratch {
  std::vector<T> col;
  std::vector<T> dcol;
};

/// 3x3 convolution, stride 1, zero padding 1. Weights [out][in][3][3] and a
/// per-output-channel bias live in the ParamStore.
template <typename T>
struct Conv3x3 {
  int in_ch = 0, out_ch = 0;
  int64_t w_off = -1, b_off = -1;

  Conv3x3() = default;
  Conv3x3(ParamStore<T>& ps, int in, int out) : in_ch(in), out_ch(out) {
    w_off = ps.add_segment(static_cast<int64_t>(out) * in * 9);
    b_off = ps.add_segment(out);
  }

  int64_t weight_count() const { return static_cast<int64_t>(out_ch) * in_ch * 9; }

  void init_he(ParamStore<T>& ps, Rng& rng) const {
    const double stddev = std::sqrt(2.0 / (static_cast<double>(in_ch) * 9.0));
    T* w = ps.value_ptr(w_off);
    for (int64_t i = 0; i < weight_count(); ++i) w[i] = static_cast<T>(rng.normal(0.0, stddev));
    std::fill(ps.value_ptr(b_off), ps.value_ptr(b_off) + out_ch, T(0));
  }

  void forward(const ParamStore<T>& ps, const Tensor3<T>& x, Tensor3<T>& y, ConvScratch<T>& scratch) const {
    if (x.c != in_ch) {
      throw StructuralError("Conv3x3: expected " + std::to_string(in_ch) + " input channels, got " +
                            std::to_string(x.c));
    }
    y.resize(out_ch, x.h, x.w);
    detail::im2col3x3(x, scratch.col);
    const int64_t hw = x.plane();
    Eigen::Map<const RowMat<T>> wm(ps.value_ptr(w_off), out_ch, static_cast<int64_t>(in_ch) * 9);
    Eigen::Map<const RowMat<T>> cm(scratch.col.data(), static_cast<int64_t>(in_ch) * 9, hw);
    Eigen::Map<RowMat<T>> ym(y.v.data(), out_ch, hw);
    ym.noalias() = wm * cm;
    Eigen::Map<const ColVec<T>> bm(ps.value_ptr(b_off), out_ch);
    ym.colwise() += bm;
  }

  /// Accumulates weight/bias gradients; writes input gradient when dx != nullptr.
  void backward(ParamStore<T>& ps, const Tensor3<T>& x, const Tensor3<T>& dy, Tensor3<T>* dx,
                ConvScratch<T>& scratch) const {
    detail::im2col3x3(x, scratch.col);
    const int64_t hw = x.plane();
    Eigen::Map<const RowMat<T>> cm(scratch.col.data(), static_cast<int64_t>(in_ch) * 9, hw);
    Eigen::Map<const RowMat<T>> dym(dy.v.data(), out_ch, hw);
    Eigen::Map<RowMat<T>> dwm(ps.grad_ptr(w_off), out_ch, static_cast<int64_t>(in_ch) * 9);
    dwm.noalias() += dym * cm.transpose();
    // Scalar bias reduction: a fixed summation order keeps results identical
    // regardless of buffer alignment, which vectorized reductions do not.
    T* db = ps.grad_ptr(b_off);
    for (int o = 0; o < out_ch; ++o) {
      const T* row = dy.v.data() + static_cast<size_t>(o) * hw;
      T acc = T(0);
      for (int64_t i = 0; i < hw; ++i) acc += row[i];
      db[o] += acc;
    }
    if (dx != nullptr) {
      scratch.dcol.assign(static_cast<size_t>(in_ch) * 9 * hw, T(0));
      Eigen::Map<RowMat<T>> dcm(scratch.dcol.data(), static_cast<int64_t>(in_ch) * 9, hw);
      Eigen::Map<const RowMat<T>> wm(ps.value_ptr(w_off), out_ch, static_cast<int64_t>(in_ch) * 9);
      dcm.noalias() = wm.transpose() * dym;
      dx->resize(in_ch, x.h, x.w);
      detail::col2im3x3(scratch.dcol, *dx);
    }
  }
};

/// 1x1 convolution (per-pixel linear map across channels).
template <typename T>
struct Conv1x1 {
  int in_ch = 0, out_ch = 0;
  int64_t w_off = -1, b_off = -1;

  Conv1x1() = default;
  Conv1x1(ParamStore<T>& ps, int in, int out) : in_ch(in), out_ch(out) {
    w_off = ps.add_segment(static_cast<int64_t>(out) * in);
    b_off = ps.add_segment(out);
  }

  void init_he(ParamStore<T>& ps, Rng& rng) const {
    const double stddev = std::sqrt(2.0 / static_cast<double>(in_ch));
    T* w = ps.value_ptr(w_off);
    for (int64_t i = 0; i < static_cast<int64_t>(out_ch) * in_ch; ++i) {
      w[i] = static_cast<T>(rng.normal(0.0, stddev));
    }
    std::fill(ps.value_ptr(b_off), ps.value_ptr(b_off) + out_ch, T(0));
  }

  void forward(const ParamStore<T>& ps, const Tensor3<T>& x, Tensor3<T>& y) const {
    if (x.c != in_ch) {
      throw StructuralError("Conv1x1: expected " + std::to_string(in_ch) + " input channels, got " +
                            std::to_string(x.c));
    }
    y.resize(out_ch, x.h, x.w);
    const int64_t hw = x.plane();
    Eigen::Map<const RowMat<T>> wm(ps.value_ptr(w_off), out_ch, in_ch);
    Eigen::Map<const RowMat<T>> xm(x.v.data(), in_ch, hw);
    Eigen::Map<RowMat<T>> ym(y.v.data(), out_ch, hw);
    ym.noalias() = wm * xm;
    Eigen::Map<const ColVec<T>> bm(ps.value_ptr(b_off), out_ch);
    ym.colwise() += bm;
  }

  void backward(ParamStore<T>& ps, const Tensor3<T>& x, const Tensor3<T>& dy, Tensor3<T>* dx) const {
    const int64_t hw = x.plane();
    Eigen::Map<const RowMat<T>> xm(x.v.data(), in_ch, hw);
    Eigen::Map<const RowMat<T>> dym(dy.v.data(), out_ch, hw);
    Eigen::Map<RowMat<T>> dwm(ps.grad_ptr(w_off), out_ch, in_ch);
    dwm.noalias() += dym * xm.transpose();
    // Scalar bias reduction: a fixed summation order keeps results identical
    // regardless of buffer alignment, which vectorized reductions do not.
    T* db = ps.grad_ptr(b_off);
    for (int o = 0; o < out_ch; ++o) {
      const T* row = dy.v.data() + static_cast<size_t>(o) * hw;
      T acc = T(0);
      for (int64_t i = 0; i < hw; ++i) acc += row[i];
      db[o] += acc;
    }
    if (dx != nullptr) {
      dx->resize(in_ch, x.h, x.w);
      Eigen::Map<RowMat<T>> dxm(dx->v.data(), in_ch, hw);
      Eigen::Map<const RowMat<T>> wm(ps.value_ptr(w_off), out_ch, in_ch);
      dxm.noalias() = wm.transpose() * dym;
    }
  }
};

template <typename T>
struct GroupNormStats {
  std::vector<T> mean;
  std::vector<T> inv_std;
};

/// Group normalization with per-channel affine. The group count is the
/// largest divisor of the channel count not exceeding 8.
template <typename T>
struct GroupNorm {
  int channels = 0, groups = 0;
  double eps = 1e-5;
  int64_t gamma_off = -1, beta_off = -1;

  GroupNorm() = default;
  GroupNorm(ParamStore<T>& ps, int ch) : channels(ch) {
    groups = std::min(8, ch);
    while (ch % groups != 0) --groups;
    gamma_off = ps.add_segment(ch);
    beta_off = ps.add_segment(ch);
  }

  void init(ParamStore<T>& ps) const {
    std::fill(ps.value_ptr(gamma_off), ps.value_ptr(gamma_off) + channels, T(1));
    std::fill(ps.value_ptr(beta_off), ps.value_ptr(beta_off) + channels, T(0));
  }

  void forward(const ParamStore<T>& ps, const Tensor3<T>& x, Tensor3<T>& y, GroupNormStats<T>* stats) const {
    if (x.c != channels) {
      throw StructuralError("GroupNorm: expected " + std::to_string(channels) + " channels, got " +
                            std::to_string(x.c));
    }
    y.resize(x.c, x.h, x.w);
    const int cpg = channels / groups;
    const int64_t hw = x.plane();
    const int64_t m = static_cast<int64_t>(cpg) * hw;
    const T* gamma = ps.value_ptr(gamma_off);
    const T* beta = ps.value_ptr(beta_off);
    if (stats != nullptr) {
      stats->mean.assign(static_cast<size_t>(groups), T(0));
      stats->inv_std.assign(static_cast<size_t>(groups), T(0));
    }
    for (int g = 0; g < groups; ++g) {
      const T* xs = x.v.data() + static_cast<size_t>(g) * cpg * hw;
      double sum = 0.0;
      for (int64_t j = 0; j < m; ++j) sum += xs[j];
      const double mu = sum / static_cast<double>(m);
      double sq = 0.0;
      for (int64_t j = 0; j < m; ++j) {
        const double d = xs[j] - mu;
        sq += d * d;
      }
      const double istd = 1.0 / std::sqrt(sq / static_cast<double>(m) + eps);
      if (stats != nullptr) {
        stats->mean[static_cast<size_t>(g)] = static_cast<T>(mu);
        stats->inv_std[static_cast<size_t>(g)] = static_cast<T>(istd);
      }
      for (int cc = 0; cc < cpg; ++cc) {
        const int ch = g * cpg + cc;
        const T* xrow = x.v.data() + static_cast<size_t>(ch) * hw;
        T* yrow = y.v.data() + static_cast<size_t>(ch) * hw;
        const T a = gamma[ch] * static_cast<T>(istd);
        const T b = beta[ch] - a * static_cast<T>(mu);
        for (int64_t j = 0; j < hw; ++j) yrow[j] = a * xrow[j] + b;
      }
    }
  }

  void backward(ParamStore<T>& ps, const Tensor3<T>& x, const Tensor3<T>& dy, Tensor3<T>& dx,
                const GroupNormStats<T>& stats) const {
    dx.resize(x.c, x.h, x.w);
    const int cpg = channels / groups;
    const int64_t hw = x.plane();
    const int64_t m = static_cast<int64_t>(cpg) * hw;
    const T* gamma = ps.value_ptr(gamma_off);
    T* dgamma = ps.grad_ptr(gamma_off);
    T* dbeta = ps.grad_ptr(beta_off);
    for (int g = 0; g < groups; ++g) {
      const T mu = stats.mean[static_cast<size_t>(g)];
      const T istd = stats.inv_std[static_cast<size_t>(g)];
      // Group-wide sums of dxhat and dxhat*xhat drive the mean/variance terms.
      double s1 = 0.0, s2 = 0.0;
      for (int cc = 0; cc < cpg; ++cc) {
        const int ch = g * cpg + cc;
        const T* xrow = x.v.data() + static_cast<size_t>(ch) * hw;
        const T* dyrow = dy.v.data() + static_cast<size_t>(ch) * hw;
        double dg = 0.0, db = 0.0;
        for (int64_t j = 0; j < hw; ++j) {
          const double xhat = (xrow[j] - mu) * istd;
          const double dxhat = dyrow[j] * gamma[ch];
          s1 += dxhat;
          s2 += dxhat * xhat;
          dg += dyrow[j] * xhat;
          db += dyrow[j];
        }
        dgamma[ch] += static_cast<T>(dg);
        dbeta[ch] += static_cast<T>(db);
      }
      const double c1 = s1 / static_cast<double>(m);
      const double c2 = s2 / static_cast<double>(m);
      for (int cc = 0; cc < cpg; ++cc) {
        const int ch = g * cpg + cc;
        const T* xrow = x.v.data() + static_cast<size_t>(ch) * hw;
        const T* dyrow = dy.v.data() + static_cast<size_t>(ch) * hw;
        T* dxrow = dx.v.data() + static_cast<size_t>(ch) * hw;
        for (int64_t j = 0; j < hw; ++j) {
          const double xhat = (xrow[j] - mu) * istd;
          const double dxhat = dyrow[j] * gamma[ch];
          dxrow[j] = static_cast<T>(istd * (dxhat - c1 - xhat * c2));
        }
      }
    }
  }
};

template <typename T>
void relu_forward(const Tensor3<T>& x, Tensor3<T>& y) {
  y.resize(x.c, x.h, x.w);
  for (size_t i = 0; i < x.v.size(); ++i) y.v[i] = x.v[i] > T(0) ? x.v[i] : T(0);
}

/// Masks by the forward output: y > 0 exactly where x > 0.
template <typename T>
void relu_backward(const Tensor3<T>& y, const Tensor3<T>& dy, Tensor3<T>& dx) {
  dx.resize(y.c, y.h, y.w);
  for (size_t i = 0; i < y.v.size(); ++i) dx.v[i] = y.v[i] > T(0) ? dy.v[i] : T(0);
}

struct MaxPoolIndices {
  std::vector<int64_t> argmax;  // flat index into the input per output element
  int in_c = 0, in_h = 0, in_w = 0;
};

/// 2x2 max pooling, stride 2. Requires even spatial dims. Ties resolve to the
/// first element in scan order.
template <typename T>
void maxpool2_forward(const Tensor3<T>& x, Tensor3<T>& y, MaxPoolIndices* idx) {
  if (x.h % 2 != 0 || x.w % 2 != 0) {
    throw StructuralError("maxpool2: spatial dims must be even, got " + std::to_string(x.h) + "x" +
                          std::to_string(x.w));
  }
  const int oh = x.h / 2, ow = x.w / 2;
  y.resize(x.c, oh, ow);
  if (idx != nullptr) {
    idx->argmax.assign(static_cast<size_t>(x.c) * oh * ow, 0);
    idx->in_c = x.c;
    idx->in_h = x.h;
    idx->in_w = x.w;
  }
  for (int ch = 0; ch < x.c; ++ch) {
    for (int r = 0; r < oh; ++r) {
      for (int c = 0; c < ow; ++c) {
        T best = x(ch, 2 * r, 2 * c);
        int64_t best_at = (static_cast<int64_t>(ch) * x.h + 2 * r) * x.w + 2 * c;
        for (int dr = 0; dr < 2; ++dr) {
          for (int dc = 0; dc < 2; ++dc) {
            const T v = x(ch, 2 * r + dr, 2 * c + dc);
            if (v > best) {
              best = v;
              best_at = (static_cast<int64_t>(ch) * x.h + 2 * r + dr) * x.w + 2 * c + dc;
            }
          }
        }
        y(ch, r, c) = best;
        if (idx != nullptr) {
          idx->argmax[(static_cast<size_t>(ch) * oh + r) * ow + c] = best_at;
        }
      }
    }
  }
}

template <typename T>
void maxpool2_backward(const Tensor3<T>& dy, Tensor3<T>& dx, const MaxPoolIndices& idx) {
  dx.resize(idx.in_c, idx.in_h, idx.in_w);
  dx.fill(T(0));
  for (size_t i = 0; i < dy.v.size(); ++i) {
    dx.v[static_cast<size_t>(idx.argmax[i])] += dy.v[i];
  }
}

/// Nearest-neighbor 2x upsampling.
template <typename T>
void upsample2_forward(const Tensor3<T>& x, Tensor3<T>& y) {
  y.resize(x.c, x.h * 2, x.w * 2);
  for (int ch = 0; ch < x.c; ++ch) {
    for (int r = 0; r < y.h; ++r) {
      const T* xrow = x.v.data() + (static_cast<size_t>(ch) * x.h + r / 2) * x.w;
      T* yrow = y.v.data() + (static_cast<size_t>(ch) * y.h + r) * y.w;
      for (int c = 0; c < y.w; ++c) yrow[c] = xrow[c / 2];
    }
  }
}

template <typename T>
void upsample2_backward(const Tensor3<T>& dy, Tensor3<T>& dx) {
  if (dy.h % 2 != 0 || dy.w % 2 != 0) {
    throw StructuralError("upsample2_backward: gradient dims must be even");
  }
  dx.resize(dy.c, dy.h / 2, dy.w / 2);
  dx.fill(T(0));
  for (int ch = 0; ch < dy.c; ++ch) {
    for (int r = 0; r < dy.h; ++r) {
      const T* dyrow = dy.v.data() + (static_cast<size_t>(ch) * dy.h + r) * dy.w;
      T* dxrow = dx.v.data() + (static_cast<size_t>(ch) * dx.h + r / 2) * dx.w;
      for (int c = 0; c < dy.w; ++c) dxrow[c / 2] += dyrow[c];
    }
  }
}

/// Channel concatenation [a; b].
template <typename T>
void concat_channels(const Tensor3<T>& a, const Tensor3<T>& b, Tensor3<T>& y) {
  if (a.h != b.h || a.w != b.w) {
    throw StructuralError("concat_channels: spatial dims differ");
  }
  y.resize(a.c + b.c, a.h, a.w);
  std::copy(a.v.begin(), a.v.end(), y.v.begin());
  std::copy(b.v.begin(), b.v.end(), y.v.begin() + a.v.size());
}

template <typename T>
void split_channels(const Tensor3<T>& dy, Tensor3<T>& da, Tensor3<T>& db, int ca, int cb) {
  if (dy.c != ca + cb) {
    throw StructuralError("split_channels: channel counts do not add up");
  }
  da.resize(ca, dy.h, dy.w);
  db.resize(cb, dy.h, dy.w);
  std::copy(dy.v.begin(), dy.v.begin() + da.v.size(), da.v.begin());
  std::copy(dy.v.begin() + da.v.size(), dy.v.end(), db.v.begin());
}

}  // namespace scribblevs
