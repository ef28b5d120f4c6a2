#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "scribblevs/common.hpp"
#include "scribblevs/types.hpp"

namespace scribblevs {

/// Exact two-way split of the pixel domain by prediction confidence.
/// omega[i] holds iff max_k p[i,k] > tau; theta is the complement.
struct ConfidencePartition {
  std::vector<uint8_t> omega;
  std::vector<uint8_t> theta;
  double tau = 0.0;

  int64_t num_pixels() const { return static_cast<int64_t>(omega.size()); }
  int64_t omega_size() const {
    int64_t n = 0;
    for (uint8_t v : omega) n += v;
    return n;
  }
};

/// Per-pixel argmax labels.
struct HardLabelMap {
  std::vector<int32_t> labels;
  int64_t num_pixels() const { return static_cast<int64_t>(labels.size()); }
};

/// Row-wise softmax. Shifted by the row maximum, so adding a constant to a
/// row leaves the output unchanged.
template <typename T>
ProbabilityMap<T> normalize(const LogitMap<T>& logits) {
  ProbabilityMap<T> p(logits.num_pixels, logits.num_classes);
  const int K = logits.num_classes;
  for (int64_t i = 0; i < logits.num_pixels; ++i) {
    T hi = logits(i, 0);
    for (int k = 1; k < K; ++k) hi = std::max(hi, logits(i, k));
    if (!std::isfinite(static_cast<double>(hi))) {
      throw NumericError("normalize: non-finite logit at pixel " + std::to_string(i));
    }
    T sum = T(0);
    for (int k = 0; k < K; ++k) {
      const T e = std::exp(logits(i, k) - hi);
      p(i, k) = e;
      sum += e;
    }
    for (int k = 0; k < K; ++k) p(i, k) /= sum;
  }
  return p;
}

/// Split pixels into high-confidence (strictly above tau) and the rest.
template <typename T>
ConfidencePartition partition(const ProbabilityMap<T>& p, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw ConfigError("partition: tau must lie in (0,1), got " + std::to_string(tau));
  }
  ConfidencePartition part;
  part.tau = tau;
  part.omega.resize(static_cast<size_t>(p.num_pixels));
  part.theta.resize(static_cast<size_t>(p.num_pixels));
  for (int64_t i = 0; i < p.num_pixels; ++i) {
    T hi = p(i, 0);
    for (int k = 1; k < p.num_classes; ++k) hi = std::max(hi, p(i, k));
    const bool confident = static_cast<double>(hi) > tau;
    part.omega[static_cast<size_t>(i)] = confident ? 1 : 0;
    part.theta[static_cast<size_t>(i)] = confident ? 0 : 1;
  }
  return part;
}

/// Argmax per pixel; ties resolve to the lowest class index.
template <typename T>
HardLabelMap hard_labels(const ProbabilityMap<T>& p) {
  HardLabelMap out;
  out.labels.resize(static_cast<size_t>(p.num_pixels));
  for (int64_t i = 0; i < p.num_pixels; ++i) {
    int best = 0;
    T hi = p(i, 0);
    for (int k = 1; k < p.num_classes; ++k) {
      if (p(i, k) > hi) {
        hi = p(i, k);
        best = k;
      }
    }
    out.labels[static_cast<size_t>(i)] = best;
  }
  return out;
}

/// Region-wise fusion: argmax labels on the confident region, inactive
/// sentinel on the rest.
inline PseudoLabelMap fuse(const HardLabelMap& a, const ConfidencePartition& part) {
  if (a.num_pixels() != part.num_pixels()) {
    throw StructuralError("fuse: pixel domain mismatch");
  }
  PseudoLabelMap pl;
  pl.labels.resize(a.labels.size());
  for (size_t i = 0; i < a.labels.size(); ++i) {
    pl.labels[i] = part.omega[i] ? a.labels[i] : pl.inactive_value;
  }
  return pl;
}

/// Regional pseudo-label diffusion: softmax, confidence partition, argmax,
/// fusion.
template <typename T>
PseudoLabelMap rpd(const LogitMap<T>& logits, double tau) {
  const ProbabilityMap<T> p = normalize(logits);
  return fuse(hard_labels(p), partition(p, tau));
}

/// Same pipeline starting from already-normalized probabilities.
template <typename T>
PseudoLabelMap rpd_from_probabilities(const ProbabilityMap<T>& p, double tau) {
  return fuse(hard_labels(p), partition(p, tau));
}

/// Argmax pseudo labels with every pixel active. The all-confident baseline.
template <typename T>
PseudoLabelMap argmax_labels(const ProbabilityMap<T>& p) {
  const HardLabelMap a = hard_labels(p);
  PseudoLabelMap pl;
  pl.labels = a.labels;
  return pl;
}

}  // namespace scribblevs
