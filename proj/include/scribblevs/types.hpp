#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "scribblevs/common.hpp"

namespace scribblevs {

/// Raw per-pixel class scores, row-major [pixel][class].
template <typename T>
struct LogitMap {
  int64_t num_pixels = 0;
  int num_classes = 0;
  std::vector<T> values;

  LogitMap() = default;
  LogitMap(int64_t n, int k) : num_pixels(n), num_classes(k), values(static_cast<size_t>(n) * k, T(0)) {}

  T operator()(int64_t i, int k) const { return values[static_cast<size_t>(i) * num_classes + k]; }
  T& operator()(int64_t i, int k) { return values[static_cast<size_t>(i) * num_classes + k]; }
};

/// Per-pixel class probabilities, row-major [pixel][class]. Each row is
/// expected to lie on the K-simplex (entries in [0,1], summing to 1).
template <typename T>
struct ProbabilityMap {
  int64_t num_pixels = 0;
  int num_classes = 0;
  std::vector<T> values;

  ProbabilityMap() = default;
  ProbabilityMap(int64_t n, int k) : num_pixels(n), num_classes(k), values(static_cast<size_t>(n) * k, T(0)) {}

  T operator()(int64_t i, int k) const { return values[static_cast<size_t>(i) * num_classes + k]; }
  T& operator()(int64_t i, int k) { return values[static_cast<size_t>(i) * num_classes + k]; }
};

/// Sparse annotations: class index per labeled pixel, ignore_value elsewhere.
struct ScribbleMask {
  std::vector<int32_t> labels;
  int32_t ignore_value = kIgnoreLabel;

  ScribbleMask() = default;
  explicit ScribbleMask(int64_t n) : labels(static_cast<size_t>(n), kIgnoreLabel) {}

  int64_t num_pixels() const { return static_cast<int64_t>(labels.size()); }
  bool labeled(int64_t i) const { return labels[static_cast<size_t>(i)] != ignore_value; }
  int64_t num_labeled() const {
    int64_t n = 0;
    for (int32_t v : labels) n += (v != ignore_value);
    return n;
  }
};

/// Hard labels on the high-confidence region, inactive sentinel elsewhere.
/// Inactive pixels are excluded from every loss term.
struct PseudoLabelMap {
  std::vector<int32_t> labels;
  int32_t inactive_value = kIgnoreLabel;

  PseudoLabelMap() = default;
  explicit PseudoLabelMap(int64_t n) : labels(static_cast<size_t>(n), kIgnoreLabel) {}

  int64_t num_pixels() const { return static_cast<int64_t>(labels.size()); }
  bool active(int64_t i) const { return labels[static_cast<size_t>(i)] != inactive_value; }
  int64_t num_active() const {
    int64_t n = 0;
    for (int32_t v : labels) n += (v != inactive_value);
    return n;
  }
  double active_fraction() const {
    return labels.empty() ? 0.0 : static_cast<double>(num_active()) / static_cast<double>(labels.size());
  }
};

/// True when every row of p is a probability simplex within `tol`.
template <typename T>
bool is_probability_map(const ProbabilityMap<T>& p, double tol = 1e-5) {
  for (int64_t i = 0; i < p.num_pixels; ++i) {
    double row = 0.0;
    for (int k = 0; k < p.num_classes; ++k) {
      const double v = static_cast<double>(p(i, k));
      if (!(v >= -tol && v <= 1.0 + tol)) return false;
      row += v;
    }
    if (std::abs(row - 1.0) > tol) return false;
  }
  return true;
}

}  // namespace scribblevs
