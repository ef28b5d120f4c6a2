#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "scribblevs/common.hpp"
#include "scribblevs/types.hpp"

namespace scribblevs {

// Probabilities are clamped to [kProbFloor, 1] inside every log; the
// cross-entropy terms are undefined at p = 0.
inline constexpr double kProbFloor = 1e-8;

// Smoothing added to numerator and denominator of the dice fraction.
inline constexpr double kDiceSmooth = 1e-5;

namespace detail {

template <typename T, typename MaskT>
void check_domain(const ProbabilityMap<T>& p, const MaskT& mask, const char* what) {
  if (p.num_pixels != mask.num_pixels()) {
    throw StructuralError(std::string(what) + ": pixel domain mismatch (" + std::to_string(p.num_pixels) +
                          " vs " + std::to_string(mask.num_pixels()) + ")");
  }
  if (p.num_classes <= 0 || p.values.size() != static_cast<size_t>(p.num_pixels) * p.num_classes) {
    throw StructuralError(std::string(what) + ": malformed probability map");
  }
}

template <typename T>
void check_label(int32_t label, int num_classes, const char* what) {
  if (label < 0 || label >= num_classes) {
    throw StructuralError(std::string(what) + ": label " + std::to_string(label) + " outside [0, " +
                          std::to_string(num_classes) + ")");
  }
}

template <typename T>
T clamped_log(T p) {
  const T lo = static_cast<T>(kProbFloor);
  return std::log(std::clamp(p, lo, T(1)));
}

}  // namespace detail

/// Cross-entropy summed over scribble-labeled pixels only; unannotated pixels
/// contribute exactly nothing.
template <typename T>
T partial_cross_entropy(const ProbabilityMap<T>& p, const ScribbleMask& s) {
  detail::check_domain(p, s, "partial_cross_entropy");
  T loss = T(0);
  for (int64_t i = 0; i < p.num_pixels; ++i) {
    const int32_t label = s.labels[static_cast<size_t>(i)];
    if (label == s.ignore_value) continue;
    detail::check_label<T>(label, p.num_classes, "partial_cross_entropy");
    loss -= detail::clamped_log(p(i, label));
  }
  return loss;
}

/// Cross-entropy summed over the active region of a pseudo-label map.
template <typename T>
T pl_cross_entropy(const ProbabilityMap<T>& p, const PseudoLabelMap& pl) {
  detail::check_domain(p, pl, "pl_cross_entropy");
  T loss = T(0);
  for (int64_t i = 0; i < p.num_pixels; ++i) {
    const int32_t label = pl.labels[static_cast<size_t>(i)];
    if (label == pl.inactive_value) continue;
    detail::check_label<T>(label, p.num_classes, "pl_cross_entropy");
    loss -= detail::clamped_log(p(i, label));
  }
  return loss;
}

/// Soft dice loss against one-hot pseudo labels, computed as one global
/// fraction over all classes and active pixels jointly. Empty active region
/// yields 0.
template <typename T>
T pl_dice(const ProbabilityMap<T>& p, const PseudoLabelMap& pl) {
  detail::check_domain(p, pl, "pl_dice");
  T intersection = T(0);
  T denom = T(0);
  bool any_active = false;
  for (int64_t i = 0; i < p.num_pixels; ++i) {
    const int32_t label = pl.labels[static_cast<size_t>(i)];
    if (label == pl.inactive_value) continue;
    detail::check_label<T>(label, p.num_classes, "pl_dice");
    any_active = true;
    intersection += p(i, label);
    for (int k = 0; k < p.num_classes; ++k) denom += p(i, k) * p(i, k);
    denom += T(1);  // one-hot target squared sums to 1 per active pixel
  }
  if (!any_active) return T(0);
  const T eps = static_cast<T>(kDiceSmooth);
  return T(1) - (T(2) * intersection + eps) / (denom + eps);
}

/// Pseudo-label objective: mean of the regional cross-entropy and dice terms.
template <typename T>
T pl_loss(const ProbabilityMap<T>& p, const PseudoLabelMap& pl) {
  return (pl_cross_entropy(p, pl) + pl_dice(p, pl)) / T(2);
}

/// Scribble loss plus the warm-up-weighted pseudo-label loss.
template <typename T>
T total_loss(T l_sup, T l_pl, T lambda_t) {
  return l_sup + lambda_t * l_pl;
}

// ---------------------------------------------------------------------------
// Gradients with respect to pre-softmax logits, given p = softmax(logits).
// Used both for training and for finite-difference verification.
// ---------------------------------------------------------------------------

/// d partial_cross_entropy / d logits. For a labeled pixel the row gradient is
/// p - onehot(label); pixels whose referenced probability sits at the clamp
/// floor contribute nothing, matching the clamped value function.
template <typename T>
std::vector<T> partial_cross_entropy_logit_grad(const ProbabilityMap<T>& p, const ScribbleMask& s) {
  detail::check_domain(p, s, "partial_cross_entropy_logit_grad");
  std::vector<T> grad(p.values.size(), T(0));
  for (int64_t i = 0; i < p.num_pixels; ++i) {
    const int32_t label = s.labels[static_cast<size_t>(i)];
    if (label == s.ignore_value) continue;
    detail::check_label<T>(label, p.num_classes, "partial_cross_entropy_logit_grad");
    if (p(i, label) <= static_cast<T>(kProbFloor)) continue;
    T* row = grad.data() + static_cast<size_t>(i) * p.num_classes;
    for (int k = 0; k < p.num_classes; ++k) row[k] += p(i, k);
    row[label] -= T(1);
  }
  return grad;
}

/// d pl_loss / d logits. The cross-entropy half follows the same p - onehot
/// form; the dice half is chained through the softmax row by row:
///   dL/dz[i,k] = p[i,k] * (q[i,k] - sum_j q[i,j] p[i,j]),  q = dL/dp.
template <typename T>
std::vector<T> pl_loss_logit_grad(const ProbabilityMap<T>& p, const PseudoLabelMap& pl) {
  detail::check_domain(p, pl, "pl_loss_logit_grad");
  const int K = p.num_classes;
  std::vector<T> grad(p.values.size(), T(0));

  // Dice fraction pieces over the active region.
  T intersection = T(0);
  T denom = T(0);
  bool any_active = false;
  for (int64_t i = 0; i < p.num_pixels; ++i) {
    const int32_t label = pl.labels[static_cast<size_t>(i)];
    if (label == pl.inactive_value) continue;
    detail::check_label<T>(label, K, "pl_loss_logit_grad");
    any_active = true;
    intersection += p(i, label);
    for (int k = 0; k < K; ++k) denom += p(i, k) * p(i, k);
    denom += T(1);
  }
  if (!any_active) return grad;

  const T eps = static_cast<T>(kDiceSmooth);
  const T num_s = T(2) * intersection + eps;
  const T den_s = denom + eps;

  std::vector<T> q(static_cast<size_t>(K));
  for (int64_t i = 0; i < p.num_pixels; ++i) {
    const int32_t label = pl.labels[static_cast<size_t>(i)];
    if (label == pl.inactive_value) continue;
    T* row = grad.data() + static_cast<size_t>(i) * K;

    // Cross-entropy half.
    if (p(i, label) > static_cast<T>(kProbFloor)) {
      for (int k = 0; k < K; ++k) row[k] += p(i, k) / T(2);
      row[label] -= T(1) / T(2);
    }

    // Dice half: q[k] = dDice/dp[i,k] = -(2*onehot[k]*den - num*2p[k]) / den^2.
    T qp = T(0);
    for (int k = 0; k < K; ++k) {
      const T dnum = (k == label) ? T(2) : T(0);
      q[static_cast<size_t>(k)] = -(dnum * den_s - num_s * T(2) * p(i, k)) / (den_s * den_s);
      qp += q[static_cast<size_t>(k)] * p(i, k);
    }
    for (int k = 0; k < K; ++k) {
      row[k] += p(i, k) * (q[static_cast<size_t>(k)] - qp) / T(2);
    }
  }
  return grad;
}

}  // namespace scribblevs
