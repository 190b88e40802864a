#pragma once
// Deterministic fork-join helper: a fixed index range is split into
// contiguous chunks, worker threads fill one result slot per chunk, and the
// caller merges the slots in index order. Results never depend on thread
// scheduling.

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

#include "hecke/arith.hpp"

namespace hk {

// Process-wide worker count (1 = fully sequential). Set from the CLI.
inline std::atomic<int>& thread_count_storage() {
  static std::atomic<int> count{[] {
    unsigned hw = std::thread::hardware_concurrency();
    return int(hw == 0 ? 1 : (hw > 8 ? 8 : hw));
  }()};
  return count;
}
inline int thread_count() { return thread_count_storage().load(std::memory_order_relaxed); }
inline void set_thread_count(int nthreads) {
  thread_count_storage().store(nthreads < 1 ? 1 : nthreads, std::memory_order_relaxed);
}

// Calls body(i) for i in [0, n) using up to thread_count() workers. Each
// worker claims whole chunks via an atomic counter; body must write only to
// per-index storage. The first exception thrown is rethrown in the caller.
template <class Body>
void parallel_for(i64 n, const Body& body) {
  if (n <= 0) return;
  int workers = std::min<i64>(thread_count(), n);
  if (workers <= 1) {
    for (i64 i = 0; i < n; ++i) body(i);
    return;
  }
  const i64 chunk = std::max<i64>(1, n / (8 * workers));
  std::atomic<i64> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto run = [&]() {
    for (;;) {
      i64 begin = next.fetch_add(chunk);
      if (begin >= n || failed.load(std::memory_order_relaxed)) return;
      i64 end = std::min(begin + chunk, n);
      try {
        for (i64 i = begin; i < end; ++i) body(i);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(size_t(workers));
  for (int t = 0; t < workers; ++t) pool.emplace_back(run);
  for (auto& th : pool) th.join();
  if (failed.load()) std::rethrow_exception(error);
}

}  // namespace hk
