#pragma once

// Index-parallel loop over independent tasks. Exceptions thrown by the body are captured and
// the one from the lowest index is rethrown after the loop, so failures are deterministic too.

#include <cstddef>
#include <exception>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vclink {

template <class Body>
void parallel_for(std::size_t n, Body&& body, bool parallel = true) {
  std::exception_ptr error;
  std::size_t errorIndex = std::numeric_limits<std::size_t>::max();
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 8) if (parallel)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(vclink_parallel_for_error)
      {
        if (static_cast<std::size_t>(i) < errorIndex) {
          errorIndex = static_cast<std::size_t>(i);
          error = std::current_exception();
        }
      }
    }
  }
  if (error) std::rethrow_exception(error);
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace vclink
