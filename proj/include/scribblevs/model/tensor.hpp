#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scribblevs/common.hpp"
#include "scribblevs/types.hpp"

namespace scribblevs {

/// Dense CHW tensor, channel-major.
template <typename T>
struct Tensor3 {
  int c = 0, h = 0, w = 0;
  std::vector<T> v;

  Tensor3() = default;
  Tensor3(int c_, int h_, int w_)
      : c(c_), h(h_), w(w_), v(static_cast<size_t>(c_) * h_ * w_, T(0)) {}

  T operator()(int ch, int r, int col) const {
    return v[(static_cast<size_t>(ch) * h + r) * w + col];
  }
  T& operator()(int ch, int r, int col) {
    return v[(static_cast<size_t>(ch) * h + r) * w + col];
  }

  int64_t plane() const { return static_cast<int64_t>(h) * w; }
  int64_t size() const { return static_cast<int64_t>(c) * h * w; }
  bool same_shape(const Tensor3& o) const { return c == o.c && h == o.h && w == o.w; }

  void resize(int c_, int h_, int w_) {
    c = c_;
    h = h_;
    w = w_;
    v.assign(static_cast<size_t>(c_) * h_ * w_, T(0));
  }

  void fill(T x) { std::fill(v.begin(), v.end(), x); }
};

template <typename T>
void check_same_shape(const Tensor3<T>& a, const Tensor3<T>& b, const char* what) {
  if (!a.same_shape(b)) {
    throw StructuralError(std::string(what) + ": tensor shape mismatch (" + std::to_string(a.c) + "x" +
                          std::to_string(a.h) + "x" + std::to_string(a.w) + " vs " + std::to_string(b.c) +
                          "x" + std::to_string(b.h) + "x" + std::to_string(b.w) + ")");
  }
}

/// CHW class scores to pixel-major [pixel][class] layout.
template <typename T>
LogitMap<T> to_logit_map(const Tensor3<T>& t) {
  LogitMap<T> out(t.plane(), t.c);
  const int64_t hw = t.plane();
  for (int k = 0; k < t.c; ++k) {
    const T* src = t.v.data() + static_cast<size_t>(k) * hw;
    for (int64_t i = 0; i < hw; ++i) out.values[static_cast<size_t>(i) * t.c + k] = src[i];
  }
  return out;
}

/// Pixel-major [pixel][class] gradients back to CHW layout.
template <typename T>
Tensor3<T> from_logit_grad(const LogitMap<T>& g, int h, int w) {
  if (g.num_pixels != static_cast<int64_t>(h) * w) {
    throw StructuralError("from_logit_grad: pixel count does not match HxW");
  }
  Tensor3<T> out(g.num_classes, h, w);
  const int64_t hw = out.plane();
  for (int k = 0; k < g.num_classes; ++k) {
    T* dst = out.v.data() + static_cast<size_t>(k) * hw;
    for (int64_t i = 0; i < hw; ++i) dst[i] = g.values[static_cast<size_t>(i) * g.num_classes + k];
  }
  return out;
}

}  // namespace scribblevs
