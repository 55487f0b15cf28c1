#pragma once

#include <cstddef>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace floral::util {

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Runs fn(0..n-1). With enabled=true the iterations execute on the OpenMP
// pool; otherwise a plain serial loop (the reference path used by tests).
// Each index must write only its own output slot, so results are identical
// in both modes. The first exception thrown by any iteration is rethrown.
template <class Fn>
void parallel_for(std::size_t n, bool enabled, Fn&& fn) {
#ifdef _OPENMP
  if (enabled && n > 1) {
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      try {
        fn(static_cast<std::size_t>(i));
      } catch (...) {
#pragma omp critical
        {
          if (!error) error = std::current_exception();
        }
      }
    }
    if (error) std::rethrow_exception(error);
    return;
  }
#else
  (void)enabled;
#endif
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

}  // namespace floral::util
