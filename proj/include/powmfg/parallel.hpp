#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace powmfg {

// Runs body(begin, end, worker) over contiguous chunks of [0, n). Each index is
// visited exactly once; results are independent of `threads` as long as the
// body only writes to per-index outputs.
template <typename Body>
void parallel_chunks(std::size_t n, unsigned threads, Body&& body) {
  threads = std::max(1u, threads);
  if (threads == 1 || n < 2) {
    body(std::size_t{0}, n, 0u);
    return;
  }
  const auto workers = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  const std::size_t chunk = (n + workers - 1) / workers;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end, w] {
      try {
        body(begin, end, w);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace powmfg
