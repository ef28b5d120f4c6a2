#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scribblevs/common.hpp"

namespace scribblevs {

/// Single-channel float image, row-major.
struct Image {
  int h = 0, w = 0;
  std::vector<float> v;

  Image() = default;
  Image(int h_, int w_) : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, 0.0f) {}

  float operator()(int r, int c) const { return v[static_cast<size_t>(r) * w + c]; }
  float& operator()(int r, int c) { return v[static_cast<size_t>(r) * w + c]; }
  int64_t num_pixels() const { return static_cast<int64_t>(h) * w; }
};

/// Integer label grid, row-major. Holds dense masks, scribbles, predictions.
struct LabelImage {
  int h = 0, w = 0;
  std::vector<int32_t> v;

  LabelImage() = default;
  LabelImage(int h_, int w_, int32_t fill = 0) : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, fill) {}

  int32_t operator()(int r, int c) const { return v[static_cast<size_t>(r) * w + c]; }
  int32_t& operator()(int r, int c) { return v[static_cast<size_t>(r) * w + c]; }
  int64_t num_pixels() const { return static_cast<int64_t>(h) * w; }
  bool same_shape(const LabelImage& o) const { return h == o.h && w == o.w; }
};

inline void check_same_shape(const LabelImage& a, const LabelImage& b, const char* what) {
  if (!a.same_shape(b)) {
    throw StructuralError(std::string(what) + ": shape mismatch (" + std::to_string(a.h) + "x" +
                          std::to_string(a.w) + " vs " + std::to_string(b.h) + "x" + std::to_string(b.w) + ")");
  }
}

}  // namespace scribblevs
