#pragma once

#include <cstdint>

#include "scribblevs/common.hpp"
#include "scribblevs/data/synth.hpp"
#include "scribblevs/grid.hpp"
#include "scribblevs/rng.hpp"

namespace scribblevs {

/// One element of the dihedral group acting on the pixel grid: a quarter-turn
/// count composed with an optional horizontal flip. Index maps only, so label
/// grids transform without interpolation.
struct DihedralTransform {
  int quarter_turns = 0;  // counterclockwise, 0..3
  bool flip = false;      // horizontal mirror applied first

  bool is_identity() const { return quarter_turns == 0 && !flip; }
};

inline DihedralTransform random_dihedral(Rng& rng) {
  const int t = static_cast<int>(rng.uniform_int(0, 7));
  return DihedralTransform{t & 3, (t & 4) != 0};
}

namespace detail {

/// Walks the destination grid and pulls each pixel from its source position:
/// the inverse of `quarter_turns` counterclockwise turns composed with an
/// optional pre-rotation horizontal flip.
template <typename Get, typename Set>
void apply_dihedral(int h, int w, const DihedralTransform& t, Get get, Set set) {
  const int oh = (t.quarter_turns % 2 == 0) ? h : w;
  const int ow = (t.quarter_turns % 2 == 0) ? w : h;
  for (int r = 0; r < oh; ++r) {
    for (int c = 0; c < ow; ++c) {
      int sr = r, sc = c;
      if (t.quarter_turns == 1) {
        sr = c;
        sc = w - 1 - r;
      } else if (t.quarter_turns == 2) {
        sr = h - 1 - r;
        sc = w - 1 - c;
      } else if (t.quarter_turns == 3) {
        sr = h - 1 - c;
        sc = r;
      }
      if (t.flip) sc = w - 1 - sc;
      set(r, c, get(sr, sc));
    }
  }
}

}  // namespace detail

inline Image transform(const Image& img, const DihedralTransform& t) {
  const int oh = (t.quarter_turns % 2 == 0) ? img.h : img.w;
  const int ow = (t.quarter_turns % 2 == 0) ? img.w : img.h;
  Image out(oh, ow);
  detail::apply_dihedral(
      img.h, img.w, t, [&](int r, int c) { return img(r, c); },
      [&](int r, int c, float v) { out(r, c) = v; });
  return out;
}

inline LabelImage transform(const LabelImage& m, const DihedralTransform& t) {
  const int oh = (t.quarter_turns % 2 == 0) ? m.h : m.w;
  const int ow = (t.quarter_turns % 2 == 0) ? m.w : m.h;
  LabelImage out(oh, ow);
  detail::apply_dihedral(
      m.h, m.w, t, [&](int r, int c) { return m(r, c); },
      [&](int r, int c, int32_t v) { out(r, c) = v; });
  return out;
}

/// Applies one transform consistently to image, dense mask, and scribble.
inline Sample transform(const Sample& s, const DihedralTransform& t) {
  Sample out;
  out.image = transform(s.image, t);
  out.dense_mask = transform(s.dense_mask, t);
  LabelImage scr(s.height(), s.width());
  scr.v = s.scribble.labels;
  const LabelImage moved = transform(scr, t);
  out.scribble = ScribbleMask(moved.num_pixels());
  out.scribble.labels = moved.v;
  return out;
}

/// Uniformly random dihedral-group augmentation, deterministic in the seed.
inline Sample augment(const Sample& s, uint64_t seed) {
  Rng rng(seed);
  return transform(s, random_dihedral(rng));
}

}  // namespace scribblevs
