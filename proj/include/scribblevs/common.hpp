#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace scribblevs {

// In-memory sentinel for "this pixel carries no label". Shared by scribble
// masks (unannotated) and pseudo-label maps (low-confidence, excluded from
// every loss term).
inline constexpr int32_t kIgnoreLabel = -1;

// On-disk sentinel used in scribble PNGs (indexed color, entry 255).
inline constexpr uint8_t kFileIgnoreValue = 255;

// Input tensors disagree on shape, pixel domain, or class count.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A configuration value is outside its admissible range.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values where finite ones are required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be read, written, or parsed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training aborted (non-finite loss, exhausted schedule, missing data).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace scribblevs
