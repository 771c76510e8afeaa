#pragma once
// Minimal index-parallel loop. Thread count comes from POLYCYC_THREADS (default 1).

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace polycyc {

inline unsigned configuredThreads() {
  const char* env = std::getenv("POLYCYC_THREADS");
  if (!env || !*env) return 1;
  try {
    int n = std::stoi(env);
    if (n <= 0) return std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(n);
  } catch (const std::exception&) {
    return 1;
  }
}

/// Calls fn(i) for i in [0, n). The first exception thrown is rethrown after all workers stop.
template <class Fn>
void parallelFor(std::size_t n, Fn&& fn, unsigned threads = 0) {
  if (threads == 0) threads = configuredThreads();
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex errMu;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lk(errMu);
        if (!err) err = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::min<std::size_t>(threads, n); ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace polycyc
