#pragma once

#include <cstdint>

#ifdef MLUQ_HAVE_OPENMP
#include <omp.h>
#endif

namespace mluq {

enum class ExecutionPolicy { serial, openmp };

// Index-parallel map. Work items write to disjoint slots keyed by their
// index, so results are identical for both policies and any thread count;
// callers reduce serially afterwards.
template <class F>
void for_each_index(std::int64_t n, ExecutionPolicy policy, F&& f) {
#ifdef MLUQ_HAVE_OPENMP
  if (policy == ExecutionPolicy::openmp) {
#pragma omp parallel for schedule(dynamic, 8)
    for (std::int64_t i = 0; i < n; ++i) f(i);
    return;
  }
#else
  (void)policy;
#endif
  for (std::int64_t i = 0; i < n; ++i) f(i);
}

inline int max_threads() {
#ifdef MLUQ_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#ifdef MLUQ_HAVE_OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace mluq
