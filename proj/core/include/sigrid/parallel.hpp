#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace sigrid {

// Resolves a requested thread count: values > 0 pass through, anything else
// means "use the hardware concurrency" (at least 1).
inline unsigned effective_threads(int requested) {
  if (requested > 0) return unsigned(requested);
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1u;
}

// Splits [begin, end) into contiguous blocks, one per worker, and runs
// fn(block_begin, block_end) on each. fn must write only state disjoint
// across blocks and must not throw; results are then independent of the
// thread count.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, int threads, Fn&& fn) {
  if (end <= begin) return;
  std::size_t n = end - begin;
  unsigned t = effective_threads(threads);
  if (t > n) t = unsigned(n);
  if (t <= 1) {
    fn(begin, end);
    return;
  }
  std::size_t chunk = (n + t - 1) / t;
  std::vector<std::thread> workers;
  workers.reserve(t - 1);
  for (unsigned w = 1; w < t; ++w) {
    std::size_t lo = begin + w * chunk;
    if (lo >= end) break;
    std::size_t hi = std::min(end, lo + chunk);
    workers.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  fn(begin, std::min(end, begin + chunk));
  for (auto& th : workers) th.join();
}

}  // namespace sigrid
