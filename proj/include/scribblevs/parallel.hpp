#pragma once

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "scribblevs/common.hpp"

namespace scribblevs {

/// Worker count from SCRIBBLEVS_NUM_WORKERS; defaults to 1 (fully serial,
/// which is also the mode the byte-determinism guarantees are stated for;
/// results are identical either way because work items are independently
/// seeded).
inline int num_workers() {
  const char* env = std::getenv("SCRIBBLEVS_NUM_WORKERS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == nullptr || *end != '\0' || v < 1 || v > 4096) {
    throw ConfigError(std::string("SCRIBBLEVS_NUM_WORKERS must be a positive integer, got \"") + env +
                      "\"");
  }
  return static_cast<int>(v);
}

/// Runs fn(i) for i in [0, n) over `workers` threads in contiguous chunks.
/// Item order within a chunk is ascending; items must not depend on each
/// other. The first thrown exception is rethrown on the caller thread.
template <typename Fn>
void parallel_for(int64_t n, int workers, Fn fn) {
  if (n <= 0) return;
  if (workers <= 1 || n == 1) {
    for (int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const int use = static_cast<int>(std::min<int64_t>(workers, n));
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(static_cast<size_t>(use));
  const int64_t chunk = (n + use - 1) / use;
  for (int t = 0; t < use; ++t) {
    threads.emplace_back([&, t]() {
      try {
        const int64_t lo = t * chunk;
        const int64_t hi = std::min<int64_t>(n, lo + chunk);
        for (int64_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[static_cast<size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

}  // namespace scribblevs
