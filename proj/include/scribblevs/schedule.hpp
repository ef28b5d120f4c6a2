#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "scribblevs/common.hpp"

namespace scribblevs {

/// Gaussian warm-up for the pseudo-label loss weight: ramps from e^-5 at
/// step 0 to exactly 1 at t_warm and stays there.
struct WarmupSchedule {
  int64_t t_warm = 1;

  double lambda_at(int64_t t) const {
    if (t_warm < 1) throw ConfigError("WarmupSchedule: t_warm must be >= 1");
    if (t < 0) throw ConfigError("WarmupSchedule: t must be >= 0");
    if (t >= t_warm) return 1.0;
    const double r = 1.0 - static_cast<double>(t) / static_cast<double>(t_warm);
    return std::exp(-5.0 * r * r);
  }
};

/// Polynomial decay from base_lr toward zero, floored so the final step never
/// becomes a literal no-op.
struct PolyLRSchedule {
  double base_lr = 0.01;
  int64_t max_iters = 1;
  double power = 0.9;

  static constexpr double kFloor = 1e-7;

  double lr_at(int64_t t) const {
    if (base_lr <= 0.0 || max_iters < 1 || power <= 0.0) {
      throw ConfigError("PolyLRSchedule: base_lr, max_iters, power must be positive");
    }
    if (t < 0) throw ConfigError("PolyLRSchedule: t must be >= 0");
    if (t > max_iters) {
      throw TrainingError("PolyLRSchedule: step " + std::to_string(t) + " past max_iters " +
                          std::to_string(max_iters));
    }
    const double frac = 1.0 - static_cast<double>(t) / static_cast<double>(max_iters);
    return std::max(base_lr * std::pow(frac, power), kFloor);
  }
};

inline double lambda_at(const WarmupSchedule& s, int64_t t) { return s.lambda_at(t); }
inline double lr_at(const PolyLRSchedule& s, int64_t t) { return s.lr_at(t); }

}  // namespace scribblevs
