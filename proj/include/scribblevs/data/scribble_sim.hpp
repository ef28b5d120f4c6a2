#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "scribblevs/common.hpp"
#include "scribblevs/grid.hpp"
#include "scribblevs/rng.hpp"
#include "scribblevs/types.hpp"

namespace scribblevs {

enum class ScribbleStyle { kSkeleton, kErosionWalk };

inline const char* scribble_style_name(ScribbleStyle s) {
  return s == ScribbleStyle::kSkeleton ? "skeleton" : "erosion-walk";
}

struct ScribbleResult {
  ScribbleMask mask;
  std::vector<int32_t> omitted_classes;  // regions too small to stroke
  std::vector<double> coverage;          // stroke pixels / class pixels, per class
};

namespace detail {

constexpr int kMinScribbleRegion = 12;

/// Zhang-Suen thinning of a binary region. The result is an 8-connected
/// centerline that is a subset of the input region.
inline std::vector<uint8_t> zhang_suen_skeleton(const std::vector<uint8_t>& region, int h, int w) {
  std::vector<uint8_t> img = region;
  auto at = [&](const std::vector<uint8_t>& buf, int r, int c) -> int {
    if (r < 0 || c < 0 || r >= h || c >= w) return 0;
    return buf[static_cast<size_t>(r) * w + c];
  };
  int64_t remaining = 0;
  for (uint8_t v : img) remaining += v;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int phase = 0; phase < 2; ++phase) {
      std::vector<std::pair<int, int>> kill;
      for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
          if (at(img, r, c) == 0) continue;
          // Neighbors clockwise from north: p2..p9 in the classic notation.
          const int n[8] = {at(img, r - 1, c),     at(img, r - 1, c + 1), at(img, r, c + 1),
                            at(img, r + 1, c + 1), at(img, r + 1, c),     at(img, r + 1, c - 1),
                            at(img, r, c - 1),     at(img, r - 1, c - 1)};
          int b = 0;
          for (int j = 0; j < 8; ++j) b += n[j];
          if (b < 2 || b > 6) continue;
          int a = 0;
          for (int j = 0; j < 8; ++j) a += (n[j] == 0 && n[(j + 1) % 8] == 1);
          if (a != 1) continue;
          if (phase == 0) {
            if (n[0] * n[2] * n[4] != 0) continue;
            if (n[2] * n[4] * n[6] != 0) continue;
          } else {
            if (n[0] * n[2] * n[6] != 0) continue;
            if (n[0] * n[4] * n[6] != 0) continue;
          }
          kill.emplace_back(r, c);
        }
      }
      // Compact symmetric remnants (a 2x2 block, for one) satisfy the removal
      // conditions at every pixel at once; applying such a pass would erase
      // the stroke. Stop thinning instead.
      if (static_cast<int64_t>(kill.size()) >= remaining) return img;
      if (!kill.empty()) changed = true;
      remaining -= static_cast<int64_t>(kill.size());
      for (const auto& [r, c] : kill) img[static_cast<size_t>(r) * w + c] = 0;
    }
  }
  return img;
}

/// 4-neighbor erosion by `rounds` (image border counts as outside).
inline std::vector<uint8_t> erode(const std::vector<uint8_t>& region, int h, int w, int rounds) {
  std::vector<uint8_t> cur = region;
  auto at = [&](const std::vector<uint8_t>& buf, int r, int c) -> int {
    if (r < 0 || c < 0 || r >= h || c >= w) return 0;
    return buf[static_cast<size_t>(r) * w + c];
  };
  for (int it = 0; it < rounds; ++it) {
    std::vector<uint8_t> next(cur.size(), 0);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        if (at(cur, r, c) && at(cur, r - 1, c) && at(cur, r + 1, c) && at(cur, r, c - 1) &&
            at(cur, r, c + 1)) {
          next[static_cast<size_t>(r) * w + c] = 1;
        }
      }
    }
    cur = std::move(next);
  }
  return cur;
}

/// Keeps at most `cap` pixels of a stroke set as one connected piece: a
/// depth-first walk over the stroke's pixel graph (8-connected) from a random
/// start, stopped early. Every kept pixel connects to the start through
/// already-kept pixels, so connectivity survives the truncation.
inline void truncate_stroke(std::vector<uint8_t>& stroke, int h, int w, int64_t cap, Rng& rng) {
  std::vector<int64_t> cells;
  for (size_t i = 0; i < stroke.size(); ++i) {
    if (stroke[i]) cells.push_back(static_cast<int64_t>(i));
  }
  if (static_cast<int64_t>(cells.size()) <= cap) return;
  std::vector<uint8_t> keep(stroke.size(), 0);
  std::vector<int64_t> stack;
  stack.push_back(cells[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(cells.size()) - 1))]);
  int64_t kept = 0;
  static constexpr int kDr[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
  static constexpr int kDc[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
  while (!stack.empty() && kept < cap) {
    const int64_t cur = stack.back();
    stack.pop_back();
    if (keep[static_cast<size_t>(cur)]) continue;
    keep[static_cast<size_t>(cur)] = 1;
    ++kept;
    const int r = static_cast<int>(cur / w), c = static_cast<int>(cur % w);
    for (int j = 0; j < 8; ++j) {
      const int rr = r + kDr[j], cc = c + kDc[j];
      if (rr < 0 || cc < 0 || rr >= h || cc >= w) continue;
      const int64_t q = static_cast<int64_t>(rr) * w + cc;
      if (stroke[static_cast<size_t>(q)] && !keep[static_cast<size_t>(q)]) stack.push_back(q);
    }
  }
  stroke = std::move(keep);
}

/// Random self-avoiding-ish walk inside the allowed set; revisits permitted
/// when stuck so strokes stay connected.
inline std::vector<uint8_t> random_walk_stroke(const std::vector<uint8_t>& allowed, int h, int w,
                                               int64_t region_size, Rng& rng) {
  std::vector<int64_t> cells;
  for (size_t i = 0; i < allowed.size(); ++i) {
    if (allowed[i]) cells.push_back(static_cast<int64_t>(i));
  }
  std::vector<uint8_t> stroke(allowed.size(), 0);
  if (cells.empty()) return stroke;
  int64_t cur = cells[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(cells.size()) - 1))];
  stroke[static_cast<size_t>(cur)] = 1;
  // Same budget as the skeleton style: step count follows the region's
  // linear scale, the way a drawn stroke would.
  const int64_t steps = std::max<int64_t>(
      8, static_cast<int64_t>(std::lround(std::sqrt(static_cast<double>(region_size)))));
  static constexpr int kDr[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
  static constexpr int kDc[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
  for (int64_t s = 0; s < steps; ++s) {
    const int r = static_cast<int>(cur / w), c = static_cast<int>(cur % w);
    int64_t fresh[8], seen[8];
    int nf = 0, ns = 0;
    for (int j = 0; j < 8; ++j) {
      const int rr = r + kDr[j], cc = c + kDc[j];
      if (rr < 0 || cc < 0 || rr >= h || cc >= w) continue;
      const int64_t q = static_cast<int64_t>(rr) * w + cc;
      if (!allowed[static_cast<size_t>(q)]) continue;
      if (stroke[static_cast<size_t>(q)]) {
        seen[ns++] = q;
      } else {
        fresh[nf++] = q;
      }
    }
    if (nf > 0) {
      cur = fresh[rng.uniform_int(0, nf - 1)];
    } else if (ns > 0) {
      cur = seen[rng.uniform_int(0, ns - 1)];
    } else {
      break;
    }
    stroke[static_cast<size_t>(cur)] = 1;
  }
  return stroke;
}

}  // namespace detail

/// Simulated annotation: one stroke per class, strictly inside the class
/// region, everything else left unannotated. Classes whose regions are too
/// small to stroke are omitted and recorded.
inline ScribbleResult scribble_from_mask(const LabelImage& mask, ScribbleStyle style, uint64_t seed) {
  int32_t max_class = 0;
  for (int32_t v : mask.v) {
    if (v < 0) throw StructuralError("scribble_from_mask: negative class in mask");
    max_class = std::max(max_class, v);
  }
  const int k = max_class + 1;
  const int h = mask.h, w = mask.w;

  ScribbleResult out;
  out.mask = ScribbleMask(mask.num_pixels());
  out.coverage.assign(static_cast<size_t>(k), 0.0);
  Rng rng(derive_seed(seed, 0));

  for (int32_t cls = 0; cls < k; ++cls) {
    std::vector<uint8_t> region(static_cast<size_t>(h) * w, 0);
    int64_t region_size = 0;
    for (size_t i = 0; i < mask.v.size(); ++i) {
      if (mask.v[i] == cls) {
        region[i] = 1;
        ++region_size;
      }
    }
    if (region_size == 0) continue;
    if (region_size < detail::kMinScribbleRegion) {
      out.omitted_classes.push_back(cls);
      continue;
    }

    std::vector<uint8_t> stroke;
    if (style == ScribbleStyle::kSkeleton) {
      stroke = detail::zhang_suen_skeleton(region, h, w);
      // A drawn stroke's length follows the region's linear scale, not its
      // area: keep one arc of the centerline about sqrt(area) long. The 3/20
      // bound still guards slivers whose skeleton is most of the region.
      const auto arc = static_cast<int64_t>(std::lround(std::sqrt(static_cast<double>(region_size))));
      detail::truncate_stroke(stroke, h, w, std::max<int64_t>(3, std::min(arc, region_size * 3 / 20)),
                              rng);
    } else {
      auto core = detail::erode(region, h, w, 2);
      if (std::find(core.begin(), core.end(), uint8_t(1)) == core.end()) {
        core = detail::erode(region, h, w, 1);
      }
      stroke = detail::random_walk_stroke(core, h, w, region_size, rng);
    }

    int64_t stroke_size = 0;
    for (size_t i = 0; i < stroke.size(); ++i) {
      if (stroke[i]) {
        out.mask.labels[i] = cls;
        ++stroke_size;
      }
    }
    if (stroke_size == 0) {
      out.omitted_classes.push_back(cls);
      continue;
    }
    out.coverage[static_cast<size_t>(cls)] =
        static_cast<double>(stroke_size) / static_cast<double>(region_size);
  }
  return out;
}

}  // namespace scribblevs
