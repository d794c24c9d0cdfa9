#pragma once

#include <cstdlib>
#include <cstdint>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace tw {

/// Serial fallback toggle: set TW_SERIAL=1 to run every parallel_for on one
/// thread (used by the benchmark to compare the two paths).
inline bool parallel_enabled() {
#if defined(_OPENMP)
  const char* env = std::getenv("TW_SERIAL");
  return env == nullptr || env[0] == '0';
#else
  return false;
#endif
}

/// Data-parallel loop over [0, n). The body must be safe to run concurrently
/// on distinct indices (engine operations are pure, so loops over independent
/// items qualify).
template <typename Body>
void parallel_for(std::int64_t n, const Body& body) {
#if defined(_OPENMP)
  if (parallel_enabled()) {
#pragma omp parallel for schedule(dynamic, 8)
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
#endif
  for (std::int64_t i = 0; i < n; ++i) body(i);
}

}  // namespace tw
