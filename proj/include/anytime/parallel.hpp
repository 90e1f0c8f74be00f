#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace anytime {

namespace detail {
inline std::atomic<unsigned>& worker_limit() {
  static std::atomic<unsigned> limit{1};
  return limit;
}
}  // namespace detail

/// Caps the number of threads used by parallel_for. 0 means hardware concurrency.
inline void set_worker_threads(unsigned n) {
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  detail::worker_limit().store(n);
}

inline unsigned worker_threads() { return detail::worker_limit().load(); }

/// Calls fn(i) for i in [0, count). Each index is visited exactly once; fn must
/// only write to per-index state so the result does not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn, std::size_t min_per_thread = 4) {
  const std::size_t threads = std::min<std::size_t>(
      worker_threads(), std::max<std::size_t>(1, count / std::max<std::size_t>(1, min_per_thread)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(threads - 1);
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace anytime
