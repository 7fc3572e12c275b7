#pragma once

#include <omp.h>

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <utility>

namespace prf {

// Worker-count resolution: explicit request > PULSEDRF_WORKERS > OpenMP default.
inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PULSEDRF_WORKERS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return omp_get_max_threads();
}

// Carries the failing task out of a parallel region.
struct TaskFailure : std::runtime_error {
  TaskFailure(std::size_t index, const std::string& what)
      : std::runtime_error("task " + std::to_string(index) + ": " + what),
        index(index),
        message(what) {}
  std::size_t index;
  std::string message;
};

// Serial reference for the parallel map below; kept for testing and for the
// benchmark comparison.
template <class Fn>
void serial_for_indexed(std::size_t n, Fn&& fn) {
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

// Runs fn(0..n-1) on a bounded OpenMP pool. Tasks must write only to their
// own slots; the result is then independent of the worker count. On failure
// the remaining tasks are drained (skipped) and the lowest failing index is
// reported.
template <class Fn>
void parallel_for_indexed(std::size_t n, int workers, Fn&& fn) {
  const int nw = resolve_workers(workers);
  if (nw <= 1 || n <= 1) {
    serial_for_indexed(n, fn);
    return;
  }
  std::atomic<bool> failed{false};
  std::vector<std::string> errors(n);
  std::vector<char> has_error(n, 0);
#pragma omp parallel for schedule(dynamic) num_threads(nw)
  for (long i = 0; i < static_cast<long>(n); ++i) {
    if (failed.load(std::memory_order_relaxed)) continue;
    try {
      fn(static_cast<std::size_t>(i));
    } catch (const std::exception& e) {
      errors[i] = e.what();
      has_error[i] = 1;
      failed.store(true, std::memory_order_relaxed);
    } catch (...) {
      errors[i] = "unknown error";
      has_error[i] = 1;
      failed.store(true, std::memory_order_relaxed);
    }
  }
  if (failed.load()) {
    for (std::size_t i = 0; i < n; ++i)
      if (has_error[i]) throw TaskFailure(i, errors[i]);
  }
}

}  // namespace prf
