#pragma once

#include <cstddef>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cellsched {

// Thread budget for all parallel kernels. 0 = hardware default, 1 = serial
// reference path (plain loop, no OpenMP region).
void set_thread_budget(int n);
int thread_budget();

// True when the process was built with OpenMP support.
bool openmp_enabled();

// Static-schedule parallel map over [0, n). Every index writes only its own
// output slot, so results are identical on the serial and parallel paths.
template <class F>
void parallel_for(std::size_t n, F&& body) {
#ifdef _OPENMP
  if (thread_budget() != 1 && n > 1) {
    int threads = thread_budget();
    if (threads <= 0) threads = omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
      body(static_cast<std::size_t>(i));
    }
    return;
  }
#endif
  // Serial reference path, kept for testing and benchmarking.
  for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace cellsched
