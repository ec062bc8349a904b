#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <thread>
#include <vector>

namespace nnd {

/// Worker count: NND_THREADS if set (minimum 1), else hardware concurrency.
inline int thread_count() {
  if (const char* env = std::getenv("NND_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(i) for i in [0, n) on up to thread_count() threads. Results must
/// be written to disjoint slots; any deterministic reduction happens after
/// the join, in index order.
template <typename Fn>
void parallel_for(std::int64_t n, Fn&& fn, int threads = 0) {
  const int workers = std::min<std::int64_t>(threads > 0 ? threads : thread_count(), n);
  if (workers <= 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  std::atomic<std::int64_t> next{0};
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::int64_t i = next.fetch_add(1);
        if (i >= n) break;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace nnd
