#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace snaprg {

/// Requested thread count resolved against the machine: <= 0 means "all
/// hardware threads".
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(worker, item) for item in [0, n) on workers pulling from a shared
/// counter; worker is a stable index in [0, threads). Items must be
/// independent; the first exception is rethrown after all workers finish.
template <typename Fn>
void parallel_for_indexed(int64_t n, int threads, Fn&& fn) {
  threads = static_cast<int>(std::min<int64_t>(resolve_threads(threads), n));
  if (threads <= 1) {
    for (int64_t i = 0; i < n; ++i) fn(0, i);
    return;
  }
  std::atomic<int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&](int w) {
    for (;;) {
      const int64_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) return;
      try {
        fn(w, i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
  }
  if (error) std::rethrow_exception(error);
}

template <typename Fn>
void parallel_for(int64_t n, int threads, Fn&& fn) {
  parallel_for_indexed(n, threads, [&](int, int64_t i) { fn(i); });
}

}  // namespace snaprg
