#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "scribblevs/common.hpp"
#include "scribblevs/grid.hpp"
#include "scribblevs/types.hpp"

namespace scribblevs {

/// Physical pixel spacing (row, col). Defaults to unit spacing.
struct Spacing {
  double row = 1.0;
  double col = 1.0;
};

/// Dice overlap 2|P∩G| / (|P|+|G|) for one class. Both sets empty counts as
/// perfect agreement (1).
inline double dice_score(const LabelImage& pred, const LabelImage& gt, int32_t cls) {
  check_same_shape(pred, gt, "dice_score");
  int64_t np = 0, ng = 0, ni = 0;
  for (size_t i = 0; i < pred.v.size(); ++i) {
    const bool in_p = pred.v[i] == cls;
    const bool in_g = gt.v[i] == cls;
    np += in_p;
    ng += in_g;
    ni += (in_p && in_g);
  }
  if (np + ng == 0) return 1.0;
  return 2.0 * static_cast<double>(ni) / static_cast<double>(np + ng);
}

namespace detail {

// Pixels of `cls` with a 4-neighbor outside the class set; the image border
// counts as outside.
inline std::vector<std::pair<int, int>> boundary_pixels(const LabelImage& m, int32_t cls) {
  std::vector<std::pair<int, int>> out;
  for (int r = 0; r < m.h; ++r) {
    for (int c = 0; c < m.w; ++c) {
      if (m(r, c) != cls) continue;
      const bool edge = r == 0 || c == 0 || r == m.h - 1 || c == m.w - 1 || m(r - 1, c) != cls ||
                        m(r + 1, c) != cls || m(r, c - 1) != cls || m(r, c + 1) != cls;
      if (edge) out.emplace_back(r, c);
    }
  }
  return out;
}

inline void directed_surface_distances(const std::vector<std::pair<int, int>>& from,
                                       const std::vector<std::pair<int, int>>& to, const Spacing& sp,
                                       std::vector<double>& pooled) {
  for (const auto& [r, c] : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [r2, c2] : to) {
      const double dr = (r - r2) * sp.row;
      const double dc = (c - c2) * sp.col;
      best = std::min(best, dr * dr + dc * dc);
    }
    pooled.push_back(std::sqrt(best));
  }
}

}  // namespace detail

/// 95th percentile (nearest rank) of the pooled symmetric surface-distance
/// multiset between the class boundaries of pred and gt. One empty side maps
/// to the image-diagonal sentinel; both empty is 0.
inline double hd95(const LabelImage& pred, const LabelImage& gt, int32_t cls, Spacing spacing = {}) {
  check_same_shape(pred, gt, "hd95");
  const auto bp = detail::boundary_pixels(pred, cls);
  const auto bg = detail::boundary_pixels(gt, cls);
  if (bp.empty() && bg.empty()) return 0.0;
  if (bp.empty() || bg.empty()) {
    const double dy = pred.h * spacing.row;
    const double dx = pred.w * spacing.col;
    return std::sqrt(dy * dy + dx * dx);
  }
  std::vector<double> pooled;
  pooled.reserve(bp.size() + bg.size());
  detail::directed_surface_distances(bp, bg, spacing, pooled);
  detail::directed_surface_distances(bg, bp, spacing, pooled);
  std::sort(pooled.begin(), pooled.end());
  const size_t rank = static_cast<size_t>(std::ceil(0.95 * static_cast<double>(pooled.size())));
  return pooled[std::max<size_t>(rank, 1) - 1];
}

struct PseudoLabelAccuracy {
  double active_accuracy = 1.0;  // agreement with ground truth on the active set
  double active_fraction = 0.0;  // |active| / N
};

/// Agreement of a pseudo-label map with dense ground truth, restricted to the
/// active region. An all-inactive map reports accuracy 1 with fraction 0.
inline PseudoLabelAccuracy pseudo_label_accuracy(const PseudoLabelMap& pl, const LabelImage& gt) {
  if (pl.num_pixels() != gt.num_pixels()) {
    throw StructuralError("pseudo_label_accuracy: pixel domain mismatch");
  }
  int64_t active = 0, agree = 0;
  for (size_t i = 0; i < pl.labels.size(); ++i) {
    if (pl.labels[i] == pl.inactive_value) continue;
    ++active;
    agree += (pl.labels[i] == gt.v[i]);
  }
  PseudoLabelAccuracy out;
  out.active_fraction =
      pl.labels.empty() ? 0.0 : static_cast<double>(active) / static_cast<double>(pl.labels.size());
  out.active_accuracy = active == 0 ? 1.0 : static_cast<double>(agree) / static_cast<double>(active);
  return out;
}

}  // namespace scribblevs
