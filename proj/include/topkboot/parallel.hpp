#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace topkboot {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs body(i) for i in [0, count). Work items must be independent and
// write only to their own slot; under that contract the result is
// identical for every thread count. The first exception thrown by any
// item is rethrown on the calling thread.
inline void parallel_for(std::int64_t count, int threads,
                         const std::function<void(std::int64_t)>& body) {
  const int nthreads = resolve_threads(threads);
  if (count <= 0) return;
  if (nthreads <= 1 || count == 1) {
    for (std::int64_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  const int workers = static_cast<int>(
      std::min<std::int64_t>(nthreads, count));
  pool.reserve(static_cast<std::size_t>(workers));
  std::atomic_flag error_latch = ATOMIC_FLAG_INIT;
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&]() {
      while (!failed.load(std::memory_order_relaxed)) {
        const std::int64_t i = next.fetch_add(1, std::memory_order_relaxed);
        if (i >= count) break;
        try {
          body(i);
        } catch (...) {
          if (!error_latch.test_and_set()) {
            first_error = std::current_exception();
          }
          failed.store(true, std::memory_order_relaxed);
          break;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace topkboot
