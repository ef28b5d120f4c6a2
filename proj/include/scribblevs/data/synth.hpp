#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "scribblevs/common.hpp"
#include "scribblevs/data/scribble_sim.hpp"
#include "scribblevs/grid.hpp"
#include "scribblevs/rng.hpp"
#include "scribblevs/types.hpp"

namespace scribblevs {

/// One dataset element: intensity image, dense ground truth, sparse scribble.
struct Sample {
  Image image;            // [0,1]
  LabelImage dense_mask;  // {0..K-1}
  ScribbleMask scribble;  // flat row-major, kIgnoreLabel where unannotated

  int height() const { return image.h; }
  int width() const { return image.w; }
};

struct DatasetSpec {
  int num_samples = 48;
  int height = 64;
  int width = 64;
  int num_classes = 4;
  double noise_level = 0.15;
  double train_fraction = 2.0 / 3.0;
  double val_fraction = 1.0 / 6.0;
  double test_fraction = 1.0 / 6.0;
  uint64_t seed = 1;
  ScribbleStyle scribble_style = ScribbleStyle::kSkeleton;

  void validate() const {
    if (num_samples < 1) throw ConfigError("DatasetSpec: num_samples must be >= 1");
    if (height < 8 || width < 8) throw ConfigError("DatasetSpec: dims must be >= 8");
    if (num_classes < 2) throw ConfigError("DatasetSpec: num_classes must be >= 2");
    if (noise_level < 0.0) throw ConfigError("DatasetSpec: noise_level must be >= 0");
    const double total = train_fraction + val_fraction + test_fraction;
    if (std::abs(total - 1.0) > 1e-9) {
      throw ConfigError("DatasetSpec: split fractions sum to " + std::to_string(total) + ", expected 1");
    }
  }
};

struct SplitAssignment {
  std::vector<int> train, val, test;
};

/// Deterministic contiguous split: the first train-count ids train, then val,
/// then the remainder tests. Samples are exchangeable by construction, so no
/// shuffle is needed.
inline SplitAssignment assign_splits(const DatasetSpec& spec) {
  spec.validate();
  const int n = spec.num_samples;
  int n_train = static_cast<int>(std::round(spec.train_fraction * n));
  int n_val = static_cast<int>(std::round(spec.val_fraction * n));
  n_train = std::clamp(n_train, 0, n);
  n_val = std::clamp(n_val, 0, n - n_train);
  SplitAssignment out;
  for (int i = 0; i < n; ++i) {
    if (i < n_train) {
      out.train.push_back(i);
    } else if (i < n_train + n_val) {
      out.val.push_back(i);
    } else {
      out.test.push_back(i);
    }
  }
  return out;
}

namespace detail {

/// Nested elliptical bands: background outside, classes 1..K-1 in equal
/// radial fractions from the outer boundary inward.
inline LabelImage nested_ring_mask(int h, int w, int k, Rng& rng) {
  const double cx = 0.5 * w + rng.uniform(-0.08, 0.08) * w;
  const double cy = 0.5 * h + rng.uniform(-0.08, 0.08) * h;
  const double radius = rng.uniform(0.26, 0.40) * std::min(h, w);
  const double ax = radius * rng.uniform(0.75, 1.0);
  const double by = radius * rng.uniform(0.75, 1.0);
  const double theta = rng.uniform(0.0, 3.14159265358979323846);
  const double ct = std::cos(theta), st = std::sin(theta);

  LabelImage mask(h, w, 0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double dx = (c + 0.5) - cx;
      const double dy = (r + 0.5) - cy;
      const double u = (dx * ct + dy * st) / ax;
      const double v = (-dx * st + dy * ct) / by;
      const double rho = std::sqrt(u * u + v * v);
      if (rho > 1.0) continue;
      const int band = std::min(k - 2, static_cast<int>((1.0 - rho) * (k - 1)));
      mask(r, c) = 1 + band;
    }
  }
  return mask;
}

inline bool has_all_classes(const LabelImage& mask, int k) {
  std::vector<char> seen(static_cast<size_t>(k), 0);
  for (int32_t v : mask.v) seen[static_cast<size_t>(v)] = 1;
  return std::all_of(seen.begin(), seen.end(), [](char s) { return s != 0; });
}

/// Class-coded intensities plus a smooth bias field and pixel noise, min-max
/// normalized and snapped to the 16-bit grid so that a PNG round trip is
/// exact. noise_level 0 leaves a piecewise-constant function of the mask.
inline Image render_image(const LabelImage& mask, int k, double noise_level, Rng& rng) {
  const int h = mask.h, w = mask.w;
  // Bright pools nested between darker walls, the background at the wall
  // level: non-adjacent regions differ only by a small tissue-like offset,
  // well inside the noise. Contrast marks the boundaries, but which class a
  // region is rides mostly on its nesting depth.
  std::vector<double> base(static_cast<size_t>(k));
  for (int c = 0; c < k; ++c) {
    base[static_cast<size_t>(c)] =
        (c % 2 == 1) ? 0.85 - 0.12 * ((c - 1) / 2) : 0.35 + 0.05 * (c / 2);
  }

  const double fx = rng.uniform(0.5, 1.5);
  const double fy = rng.uniform(0.5, 1.5);
  const double phase = rng.uniform(0.0, 2.0 * 3.14159265358979323846);

  std::vector<double> vals(static_cast<size_t>(h) * w);
  double lo = 1e300, hi = -1e300;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double v = base[static_cast<size_t>(mask(r, c))];
      if (noise_level > 0.0) {
        const double bias =
            std::sin(2.0 * 3.14159265358979323846 * (fx * c / w + fy * r / h) + phase);
        v += noise_level * (0.6 * bias + 0.5 * rng.normal());
      }
      vals[static_cast<size_t>(r) * w + c] = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }

  Image img(h, w);
  const double span = hi > lo ? hi - lo : 1.0;
  for (size_t i = 0; i < vals.size(); ++i) {
    const double unit = (vals[i] - lo) / span;
    img.v[i] = static_cast<float>(std::round(unit * 65535.0) / 65535.0);
  }
  return img;
}

}  // namespace detail

/// One deterministic sample; the rng must be seeded per sample index.
inline Sample generate_sample(const DatasetSpec& spec, Rng rng) {
  LabelImage mask;
  bool ok = false;
  for (int attempt = 0; attempt < 16; ++attempt) {
    mask = detail::nested_ring_mask(spec.height, spec.width, spec.num_classes, rng);
    if (detail::has_all_classes(mask, spec.num_classes)) {
      ok = true;
      break;
    }
  }
  if (!ok) {
    throw StructuralError("generate_sample: could not realize all " + std::to_string(spec.num_classes) +
                          " classes; dims too small for the shape family");
  }

  Sample s;
  s.dense_mask = mask;
  s.image = detail::render_image(mask, spec.num_classes, spec.noise_level, rng);
  auto scribbled = scribble_from_mask(mask, spec.scribble_style, rng.next_u64());
  s.scribble = std::move(scribbled.mask);

  for (int c = 0; c < spec.num_classes; ++c) {
    bool covered = false;
    for (size_t i = 0; i < s.scribble.labels.size() && !covered; ++i) {
      covered = s.scribble.labels[i] == c;
    }
    if (!covered) {
      throw StructuralError("generate_sample: class " + std::to_string(c) +
                            " received no scribble; shape too small");
    }
  }
  return s;
}

/// Deterministic given spec.seed: every sample derives its own child seed.
inline std::vector<Sample> generate(const DatasetSpec& spec) {
  spec.validate();
  std::vector<Sample> out(static_cast<size_t>(spec.num_samples));
  for (int i = 0; i < spec.num_samples; ++i) {
    out[static_cast<size_t>(i)] = generate_sample(spec, Rng(derive_seed(spec.seed, static_cast<uint64_t>(i))));
  }
  return out;
}

}  // namespace scribblevs
