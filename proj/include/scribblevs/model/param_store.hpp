#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scribblevs/common.hpp"

namespace scribblevs {

/// Flat parameter and gradient storage. Layers reserve contiguous segments at
/// construction and address them by offset, which keeps the whole model
/// exposable as one vector for EMA updates, optimizers, and checkpoints.
template <typename T>
struct ParamStore {
  std::vector<T> values;
  std::vector<T> grads;

  int64_t add_segment(int64_t n) {
    const int64_t off = static_cast<int64_t>(values.size());
    values.resize(values.size() + static_cast<size_t>(n), T(0));
    grads.resize(values.size(), T(0));
    return off;
  }

  int64_t size() const { return static_cast<int64_t>(values.size()); }

  void zero_grad() { std::fill(grads.begin(), grads.end(), T(0)); }

  T* value_ptr(int64_t off) { return values.data() + off; }
  const T* value_ptr(int64_t off) const { return values.data() + off; }
  T* grad_ptr(int64_t off) { return grads.data() + off; }

  void check_offset(int64_t off, int64_t n) const {
    if (off < 0 || off + n > size()) {
      throw StructuralError("ParamStore: segment [" + std::to_string(off) + ", " +
                            std::to_string(off + n) + ") outside store of size " + std::to_string(size()));
    }
  }
};

}  // namespace scribblevs
