#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scribblevs/common.hpp"

namespace scribblevs {

/// Effective EMA decay with the standard early ramp: min(1 - 1/(step+1), decay).
/// Step 0 therefore copies the student outright.
inline double effective_ema_decay(int64_t step, double decay) {
  return std::min(1.0 - 1.0 / static_cast<double>(step + 1), decay);
}

/// teacher <- a*teacher + (1-a)*student, element-wise.
template <typename T>
void ema_update(std::span<T> teacher, std::span<const T> student, int64_t step, double decay) {
  if (step < 0) {
    throw ConfigError("ema_update: step must be >= 0, got " + std::to_string(step));
  }
  if (!(decay >= 0.0 && decay < 1.0)) {
    throw ConfigError("ema_update: decay must lie in [0, 1), got " + std::to_string(decay));
  }
  if (teacher.size() != student.size()) {
    throw StructuralError("ema_update: parameter layouts differ (" + std::to_string(teacher.size()) +
                          " vs " + std::to_string(student.size()) + ")");
  }
  const T a = static_cast<T>(effective_ema_decay(step, decay));
  const T b = T(1) - a;
  for (size_t i = 0; i < teacher.size(); ++i) {
    teacher[i] = a * teacher[i] + b * student[i];
  }
}

/// Student parameters train; teacher parameters are only ever written by
/// ema_update. Layouts are identical by construction.
template <typename T>
struct TeacherStudentPair {
  std::vector<T> student_params;
  std::vector<T> teacher_params;
  double ema_decay = 0.99;
};

template <typename T>
TeacherStudentPair<T> init_pair(std::vector<T> student_params, double ema_decay = 0.99) {
  TeacherStudentPair<T> pair;
  pair.teacher_params = student_params;  // exact copy
  pair.student_params = std::move(student_params);
  pair.ema_decay = ema_decay;
  return pair;
}

template <typename T>
void ema_update(TeacherStudentPair<T>& pair, int64_t step) {
  ema_update<T>(std::span<T>(pair.teacher_params), std::span<const T>(pair.student_params), step,
                pair.ema_decay);
}

}  // namespace scribblevs
