#pragma once

#include <cstdint>

namespace pref {

// Number of worker threads used by batched kernels. Resolved once from
// PREF_THREADS (falling back to the hardware count) and clamped to >= 1.
int thread_count();

// Overrides the resolved thread count for the current process.
void set_thread_count(int n);

// Kernels partition output ranges across threads and never share
// accumulators, so results are identical for any thread count.
template <typename F>
void parallel_for(std::int64_t begin, std::int64_t end, std::int64_t grain, F&& body) {
  const std::int64_t n = end - begin;
  if (n <= 0) return;
  int nt = thread_count();
  if (nt <= 1 || n < grain * 2) {
    body(begin, end);
    return;
  }
#pragma omp parallel num_threads(nt)
  {
#pragma omp for schedule(static)
    for (std::int64_t i = begin; i < end; i += grain) {
      std::int64_t hi = i + grain < end ? i + grain : end;
      body(i, hi);
    }
  }
}

}  // namespace pref
