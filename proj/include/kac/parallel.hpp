#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace kac {

/// Default worker count: KAC_WORKERS if set, else hardware concurrency.
inline unsigned default_workers() {
  if (const char* env = std::getenv("KAC_WORKERS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs job(i) for i in [0, count) on up to `workers` threads. Jobs must
/// write only to state they own (e.g. slot i of a preallocated vector).
/// The first exception thrown by any job is rethrown here.
template <class Job>
void parallel_for(std::size_t count, unsigned workers, Job&& job) {
  if (workers == 0) workers = default_workers();
  const std::size_t nthreads = std::min<std::size_t>(workers, count);
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace kac
