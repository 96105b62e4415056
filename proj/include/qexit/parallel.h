#ifndef QEXIT_PARALLEL_H_
#define QEXIT_PARALLEL_H_

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qexit {

/// Number of workers to use when the caller asks for 0 ("auto").
inline std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Calls fn(i) for every i in [0, n). Work is claimed dynamically, so fn must
/// write only to slots owned by i. The first exception thrown by any worker
/// is rethrown on the calling thread after all workers finish.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t num_threads, Fn&& fn) {
  num_threads = std::min(resolve_threads(num_threads), n);
  if (num_threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        next.store(n, std::memory_order_relaxed);
      }
    }
  };
  std::vector<std::jthread> workers;
  workers.reserve(num_threads - 1);
  for (std::size_t t = 1; t < num_threads; ++t) workers.emplace_back(worker);
  worker();
  workers.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace qexit

#endif  // QEXIT_PARALLEL_H_
