#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace impact {

// Every kernel below runs under either mode; results are bit-identical
// (per-item work is independent and reductions use a fixed order).
enum class ExecMode { Serial, Parallel };

inline void set_max_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Runs body(lo, hi) over a partition of [0, n). Exceptions thrown by the body
// are captured and rethrown after the parallel region (first one wins).
template <class Body>
void for_each_chunk(std::int64_t n, ExecMode mode, Body&& body) {
  if (n <= 0) return;
#ifdef _OPENMP
  if (mode == ExecMode::Parallel && n > 1 && !omp_in_parallel()) {
    const std::int64_t threads = std::max(1, omp_get_max_threads());
    const std::int64_t chunk =
        std::max<std::int64_t>(256, (n + threads * 8 - 1) / (threads * 8));
    const std::int64_t nchunks = (n + chunk - 1) / chunk;
    std::exception_ptr err;
    std::mutex err_mutex;
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t c = 0; c < nchunks; ++c) {
      try {
        body(c * chunk, std::min(n, (c + 1) * chunk));
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!err) err = std::current_exception();
      }
    }
    if (err) std::rethrow_exception(err);
    return;
  }
#endif
  (void)mode;
  body(std::int64_t{0}, n);
}

}  // namespace impact
