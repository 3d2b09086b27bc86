#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace liabval {

// Process-wide worker count used by the layer-parallel loops. Defaults to 1.
inline std::atomic<unsigned>& worker_count() {
  static std::atomic<unsigned> n{1};
  return n;
}

inline void set_worker_count(unsigned n) { worker_count() = std::max(1u, n); }

// Runs f(i) for i in [0, n). Each index must write only its own outputs, so
// results do not depend on the worker count.
template <typename F>
void parallel_for(std::size_t n, F&& f, std::size_t min_chunk = 64) {
  unsigned workers = worker_count();
  if (workers <= 1 || n < 2 * min_chunk) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::size_t chunks = std::min<std::size_t>(workers, (n + min_chunk - 1) / min_chunk);
  std::vector<std::jthread> pool;
  pool.reserve(chunks);
  for (std::size_t c = 0; c < chunks; ++c) {
    std::size_t lo = n * c / chunks, hi = n * (c + 1) / chunks;
    pool.emplace_back([lo, hi, &f] {
      for (std::size_t i = lo; i < hi; ++i) f(i);
    });
  }
}

}  // namespace liabval
