#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace seqclock {

/// Runs fn(i) for i in [0, n) on a small thread pool. Each index owns its
/// output slot, so results are deterministic regardless of thread count.
/// The first exception thrown by any worker is rethrown after all workers
/// finish. SEQCLOCK_THREADS overrides the worker count.
inline void parallel_for_index(std::size_t n, const std::function<void(std::size_t)>& fn) {
  unsigned workers = std::thread::hardware_concurrency();
  if (const char* env = std::getenv("SEQCLOCK_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) workers = static_cast<unsigned>(v);
  }
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error = nullptr;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };

  std::vector<std::thread> pool;
  const unsigned count = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  pool.reserve(count - 1);
  for (unsigned w = 1; w < count; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace seqclock
